#pragma once

#include <memory>
#include <vector>

#include "defect/types.hpp"

namespace defect {

/// Eigenvalue with unit-norm right/left eigenvectors, phase-fixed so that
/// y^H x is real and nonnegative. r stores that scalar.
struct EigenTriple {
  Complex lambda;
  CVector x;  // right eigenvector
  CVector y;  // left eigenvector
  double r = 0.0;
  bool tie_broken = false;  // equidistant-target tie resolved deterministically
};

struct EigOptions {
  double gap_tol_rel = 1e-12;       // matching / simple-spectrum threshold, times ||M||_F
  double residual_tol_rel = 1e-10;  // eigenpair residual bound, times ||M||_F
  bool force_real = false;          // make eigenvectors real for a real eigenvalue of a real matrix
  double real_lambda_tol = 1e-10;   // |Im lambda| <= tol * ||M||_F counts as real
};

/// All eigentriples of M. Right eigenvectors come from eig(M), left ones from
/// an independent eig(M^H) matched by nearest conjugate eigenvalue.
std::vector<EigenTriple> eig_pairs(const CMatrix& M, const EigOptions& opts = {});

/// The eigentriple whose eigenvalue is closest to `target`.
EigenTriple nearest_triple(const CMatrix& M, Complex target, const EigOptions& opts = {});

/// Spectral factorization A = V diag(d) V^{-1}, computed once and reused for
/// shifted solves (A - lambda I)^{-1} v at arbitrary shifts.
class SpectralBase {
 public:
  explicit SpectralBase(const CMatrix& A);
  Eigen::Index n() const { return d_.size(); }
  const CVector& eigenvalues() const { return d_; }
  CVector solve(Complex lambda, const CVector& rhs) const;          // (A - lambda I)^{-1} rhs
  CMatrix solve(Complex lambda, const CMatrix& rhs) const;
  CVector solve_adjoint(Complex lambda, const CVector& rhs) const;  // (A - lambda I)^{-H} rhs
  CMatrix solve_adjoint(Complex lambda, const CMatrix& rhs) const;

 private:
  CMatrix v_, vinv_;
  CVector d_;
};

/// Shifted solver with a low-rank update applied through the
/// Sherman-Morrison-Woodbury identity: (A - lambda I + U1 S1 V1^H)^{-1}.
class SmwSolver {
 public:
  SmwSolver(const SpectralBase& base, Complex lambda,
            CMatrix u1, CMatrix sigma1, CMatrix v1);
  CVector solve(const CVector& v) const;
  CVector solve_adjoint(const CVector& v) const;

 private:
  const SpectralBase& base_;
  Complex lambda_;
  CMatrix u1_, sigma1_, v1_;
  CMatrix xu_;  // (A - lambda I)^{-1} U1
  CMatrix yv_;  // (A - lambda I)^{-H} V1
  Eigen::PartialPivLU<CMatrix> cap_;      // S1 + S1 V1^H (A-lI)^{-1} U1 S1
  Eigen::PartialPivLU<CMatrix> cap_adj_;  // adjoint capacitance
};

/// One-shot SMW solve (A - lambda I + U1 Sigma1 V1^H)^{-1} v.
CVector smw_solve(const SpectralBase& base, Complex lambda, const CMatrix& u1,
                  const CMatrix& sigma1, const CMatrix& v1, const CVector& v);

/// Action of the group inverse G of B = M - lambda I (index one, null vectors
/// x and y from the triple), realized as Pi (B + y x^H)^{-1} Pi with
/// Pi = I - x z^H, z = y / (y^H x).
class GroupInverse {
 public:
  /// Dense path: one LU factorization of (B + y x^H).
  GroupInverse(const CMatrix& M, const EigenTriple& t);
  /// SMW path: (B + y x^H) = (A - lambda I) + (eps E + y x^H) with E = U T V^H.
  GroupInverse(const SpectralBase& base, double eps, const CMatrix& eu,
               const CMatrix& et, const CMatrix& ev, const EigenTriple& t);

  CVector apply(const CVector& v) const;          // G v
  CVector apply_adjoint(const CVector& v) const;  // G^H v

 private:
  CVector x_, z_;  // projector data
  std::shared_ptr<Eigen::PartialPivLU<CMatrix>> lu_;
  std::shared_ptr<SmwSolver> smw_;
};

struct RankFactors {
  CMatrix U, T, V;  // U, V n-by-k orthonormal, T k-by-k
  bool rank_deficient = false;
};
struct RankFactorsReal {
  RMatrix U, T, V;
  bool rank_deficient = false;
};

/// Best Frobenius rank-k approximation M ~ U T V^H; near-zero singular values
/// are padded to mu_pad = mu_pad_rel * max(sigma_1, 1) so T stays invertible.
RankFactors best_rank_k(const CMatrix& M, int k, double mu_pad_rel = 1e-8);
RankFactorsReal best_rank_k(const RMatrix& M, int k, double mu_pad_rel = 1e-8);

/// Moore-Penrose pseudoinverse of a matrix known to have nullity exactly one
/// (the smallest singular value is treated as zero).
CMatrix pinv_nullity_one(const CMatrix& B);

}  // namespace defect
