#pragma once

#include <iosfwd>
#include <string>

#include "defect/outer.hpp"

namespace defect {

/// JSON report with the solver outcome and per-iterate history.
std::string report_to_json(const DistanceReport& rep);
void write_report(const DistanceReport& rep, const std::string& path);

/// CSV iterate table with header `k,eps,r`.
void write_iterate_csv(const DistanceReport& rep, std::ostream& out);

/// Human-readable table in the style of the convergence tables
/// (coalesced evaluations shown as "< tol").
void write_iterate_table(const DistanceReport& rep, std::ostream& out);

/// CSV grid `re,im,sigma_min` of smallest singular values of A - zI.
void write_sigma_min_grid(const CMatrix& A, double re0, double re1, double im0, double im1,
                          int nx, int ny, std::ostream& out,
                          const std::vector<double>& levels = {});

}  // namespace defect
