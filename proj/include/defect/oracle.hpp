#pragma once

#include <cstdint>

#include "defect/flow.hpp"

namespace defect {
namespace oracle {

struct OracleConfig {
  std::uint64_t seed = 12345;
  int n_samples = 100;
  double fd_step = 1e-6;       // within [1e-8, 1e-4]
  int search_resolution = 96;  // coarse grid points per angle
};

/// Central finite difference of |y^H x| of the tracked eigenvalue along
/// t -> renormalize(E + t D).
double fd_directional(const CMatrix& A, double eps, const Perturbation& E, const CMatrix& D,
                      const StructureMode& mode, Complex target, double fd_step = 1e-6);

/// Exhaustive search for the nearest defective 2x2 matrix: defective means
/// lambda I + theta u q^H with q orthogonal to u, so the distance to each
/// (u, q) slice is an orthogonal projection and only the angles are searched.
double brute_force_2x2(const CMatrix& A, const StructureMode& mode,
                       const OracleConfig& cfg = {});

/// Dense evaluation of the projected RHS -P_E(S_active) + Re<E,S_active> E,
/// with the projector built from the state's factors.
CMatrix dense_reference_rhs(const FlowState& st, const StructureMode& mode);

/// Dense reconstruction Udot T V^H + U Tdot V^H + U T Vdot^H of the factored RHS.
CMatrix reconstruct_factored_rhs(const FlowState& st);

/// Seeded dense unit-norm perturbation in the admissible class.
Perturbation random_unit_perturbation(Eigen::Index n, const StructureMode& mode,
                                      std::uint64_t seed);

/// Seeded admissible direction, tangent at E (Re<D,E> = 0), unit norm.
CMatrix random_tangent(const Perturbation& E, const StructureMode& mode, std::uint64_t seed);

/// Seeded dense test matrix (real or complex entries).
CMatrix random_matrix(Eigen::Index n, bool real, std::uint64_t seed);

}  // namespace oracle
}  // namespace defect
