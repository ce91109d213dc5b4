#pragma once

#include <iosfwd>
#include <string>

#include "defect/types.hpp"

namespace defect {

struct MatrixMarketData {
  CMatrix matrix;   // dense, symmetry expanded
  Mask mask;        // explicitly stored entries (symmetry expanded)
  bool complex_field = false;
};

/// Coordinate or array format; real/complex/integer field; general or
/// symmetric symmetry. Pattern-only, skew-symmetric, and hermitian files are
/// rejected as unsupported.
MatrixMarketData read_matrix_market(const std::string& path);
MatrixMarketData read_matrix_market(std::istream& in, const std::string& name);

/// Array-format writer (general symmetry), real or complex field.
void write_matrix_market(const CMatrix& m, const std::string& path);

}  // namespace defect
