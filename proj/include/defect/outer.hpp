#pragma once

#include <array>
#include <optional>
#include <vector>

#include "defect/flow.hpp"

namespace defect {

struct OuterOptions {
  double delta = 1e-3;
  double tol = 1e-6;
  double eps0 = -1.0;    // < 0: choose from the candidate score
  double eps_lo = 0.0;
  double eps_hi = -1.0;  // < 0: min(upper bound, 10 * eps0)
  double theta = 0.8;    // weighted-bisection factor in (0, 1)
  int max_outer = 50;
  bool warm_start = true;
  bool use_smw = false;
  double not_stationary_tol = 1e-2;
  FlowOptions flow;
  std::uint64_t seed = 20240901u;
};

struct OuterIterate {
  int k = 0;
  double epsilon = 0;
  double r = 0;
  bool coalesced = false;
  bool used_bisection = false;  // how the NEXT epsilon was chosen
  double gamma = 0;             // Puiseux estimates at this iterate (0 if n/a)
  double eps_star = 0;
};

struct PuiseuxDiagnostics {
  double c_abs = 0;      // |C| = |y^H B^+ x|
  double rr_prime = 0;   // r * r'
  double ratio = 0;      // r r' / (-2 |C|)
};

struct DistanceReport {
  StructureMode mode;
  double delta = 0, tol = 0;
  std::vector<OuterIterate> iterates;
  double eps_delta_star = 0;
  double eps_zero_star = 0;
  double gamma = 0;
  std::array<Complex, 2> coalescing_lambdas{};
  Complex tracked_lambda;
  StationarityDiagnostics stationarity;
  PuiseuxDiagnostics puiseux;
  double wall_time_s = 0;
  bool converged = false;
};

struct REval {
  double r = 0;
  bool coalesced = false;
  FlowResult flow;
};

/// r(eps): converged inner flow at the given eps, warm-started when a previous
/// perturbation is supplied.
REval r_of_eps(const FlowProblem& problem, double eps,
               const std::optional<Perturbation>& warm, Complex target);

/// Closed-form derivative r'(eps) = r * Re(x^H G E x + y^H E G y) at a
/// converged state, cross-checked against -r * ||S_active||.
double r_prime(const FlowState& st, const StructureMode& mode,
               double not_stationary_tol = 1e-2);

struct PuiseuxStep {
  double gamma = 0;
  double eps_star = 0;
  double eps_next = 0;
};

/// Newton step on the square-root model r ~ gamma * sqrt(eps* - eps).
PuiseuxStep puiseux_step(double eps_k, double r_k, double rprime_k, double delta);

/// Proposition-7.3-style diagnostic: r r' versus -2 |y^H B^+ x|.
PuiseuxDiagnostics puiseux_diagnostics(const CMatrix& A, const FlowState& st,
                                       const StructureMode& mode);

/// Full outer iteration (Newton-bisection on r(eps) = delta).
DistanceReport solve_distance(const CMatrix& A, const StructureMode& mode,
                              const OuterOptions& opts, Complex target);

}  // namespace defect
