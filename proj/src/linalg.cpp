#include "defect/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "defect/util.hpp"

namespace defect {
namespace {

constexpr double kSingularCond = 4.5e12;  // ~ (1/u) * 1e-3

void eig_of(const CMatrix& M, CVector& vals, CMatrix& vecs) {
  if (is_real(M)) {
    Eigen::EigenSolver<RMatrix> es(M.real());
    if (es.info() != Eigen::Success) throw NonFinite("eigendecomposition failed");
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  } else {
    Eigen::ComplexEigenSolver<CMatrix> es(M);
    if (es.info() != Eigen::Success) throw NonFinite("eigendecomposition failed");
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  }
  if (!vals.allFinite() || !vecs.allFinite()) throw NonFinite("eigendecomposition produced NaN/Inf");
}

// Rotate the phase so the largest component is real positive, then drop
// numerically-zero imaginary parts.
void force_real_vector(CVector& v) {
  Eigen::Index imax;
  v.cwiseAbs().maxCoeff(&imax);
  Complex piv = v(imax);
  if (std::abs(piv) > 0) v *= std::conj(piv) / std::abs(piv);
  double im = v.imag().cwiseAbs().maxCoeff();
  if (im > 1e-8) throw DegenerateSpectrum("eigenvector of a real eigenvalue is not real");
  v = complexify(v.real());
  v.normalize();
}

void normalize_triple(EigenTriple& t, double norm_m, bool matrix_real, const EigOptions& o) {
  t.x.normalize();
  t.y.normalize();
  bool real_lambda =
      matrix_real && std::abs(t.lambda.imag()) <= o.real_lambda_tol * std::max(norm_m, 1.0);
  if (o.force_real && real_lambda) {
    t.lambda = Complex(t.lambda.real(), 0.0);
    force_real_vector(t.x);
    force_real_vector(t.y);
    double c = t.y.real().dot(t.x.real());
    if (c < 0) t.y = -t.y;
    t.r = std::abs(c);
  } else {
    Complex c = t.y.dot(t.x);  // y^H x
    double a = std::abs(c);
    if (a > 0) t.y *= c / a;   // y <- e^{i arg(c)} y, so y^H x = |c|
    t.r = a;
  }
}

void check_residuals(const CMatrix& M, const EigenTriple& t, double norm_m, const EigOptions& o) {
  double tol = o.residual_tol_rel * std::max(norm_m, 1.0);
  double rx = (M * t.x - t.lambda * t.x).norm();
  double ry = (M.adjoint() * t.y - std::conj(t.lambda) * t.y).norm();
  if (rx > tol || ry > tol)
    throw DegenerateSpectrum("eigenpair residual above tolerance (" + std::to_string(rx) + ", " +
                             std::to_string(ry) + ")");
}

// Index of the left-eigendecomposition value closest to conj(lambda), with an
// ambiguity guard: a second value within gap_tol of the best is an error.
Eigen::Index match_left(const CVector& lvals, Complex lambda, double gap_tol) {
  Eigen::Index best = 0;
  double d0 = std::numeric_limits<double>::infinity(), d1 = d0;
  for (Eigen::Index j = 0; j < lvals.size(); ++j) {
    double d = std::abs(lvals(j) - std::conj(lambda));
    if (d < d0) {
      d1 = d0;
      d0 = d;
      best = j;
    } else if (d < d1) {
      d1 = d;
    }
  }
  if (lvals.size() > 1 && d1 - d0 <= gap_tol)
    throw DegenerateSpectrum("left/right eigenvalue matching is ambiguous");
  return best;
}

}  // namespace

std::vector<EigenTriple> eig_pairs(const CMatrix& M, const EigOptions& opts) {
  if (M.rows() != M.cols()) throw Error("eig_pairs: matrix must be square");
  check_finite(M, "eig_pairs");
  const double nm = M.norm();
  const double gap_tol = opts.gap_tol_rel * std::max(nm, 1.0);
  const bool mreal = is_real(M);

  CVector vals, lvals;
  CMatrix vecs, lvecs;
  eig_of(M, vals, vecs);
  eig_of(M.adjoint(), lvals, lvecs);

  const Eigen::Index n = vals.size();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(vals(i) - vals(j)) <= gap_tol)
        throw DegenerateSpectrum("eigenvalues closer than the simplicity threshold");

  std::vector<bool> used(static_cast<size_t>(n), false);
  std::vector<EigenTriple> out;
  out.reserve(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = match_left(lvals, vals(i), gap_tol);
    if (used[static_cast<size_t>(j)])
      throw DegenerateSpectrum("left/right eigenvalue matching is not one-to-one");
    used[static_cast<size_t>(j)] = true;
    EigenTriple t;
    t.lambda = vals(i);
    t.x = vecs.col(i);
    t.y = lvecs.col(j);
    normalize_triple(t, nm, mreal, opts);
    check_residuals(M, t, nm, opts);
    out.push_back(std::move(t));
  }
  return out;
}

EigenTriple nearest_triple(const CMatrix& M, Complex target, const EigOptions& opts) {
  if (M.rows() != M.cols()) throw Error("nearest_triple: matrix must be square");
  check_finite(M, "nearest_triple");
  const double nm = M.norm();
  const double gap_tol = opts.gap_tol_rel * std::max(nm, 1.0);
  const bool mreal = is_real(M);

  CVector vals, lvals;
  CMatrix vecs, lvecs;
  eig_of(M, vals, vecs);
  eig_of(M.adjoint(), lvals, lvecs);

  Eigen::Index best = 0;
  bool tie = false;
  double d0 = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    double d = std::abs(vals(i) - target);
    if (std::abs(d - d0) <= 1e-14 * std::max(1.0, std::abs(target))) {
      // equidistant: keep the one with smaller imaginary part, then real part
      tie = true;
      Complex a = vals(best), b = vals(i);
      if (std::make_pair(b.imag(), b.real()) < std::make_pair(a.imag(), a.real())) best = i;
    } else if (d < d0) {
      d0 = d;
      best = i;
      tie = false;
    }
  }
  if (tie) logf(LogLevel::Debug, "nearest_triple: equidistant eigenvalues, tie broken");

  EigenTriple t;
  t.lambda = vals(best);
  t.x = vecs.col(best);
  t.y = lvecs.col(match_left(lvals, t.lambda, gap_tol));
  t.tie_broken = tie;
  normalize_triple(t, nm, mreal, opts);
  check_residuals(M, t, nm, opts);
  return t;
}

SpectralBase::SpectralBase(const CMatrix& A) {
  Eigen::ComplexEigenSolver<CMatrix> es(A);
  if (es.info() != Eigen::Success) throw NonFinite("spectral base: eigendecomposition failed");
  v_ = es.eigenvectors();
  d_ = es.eigenvalues();
  Eigen::PartialPivLU<CMatrix> lu(v_);
  vinv_ = lu.solve(CMatrix::Identity(v_.rows(), v_.cols()));
  if (!vinv_.allFinite()) throw NonFinite("spectral base: eigenvector matrix is singular");
}

CVector SpectralBase::solve(Complex lambda, const CVector& rhs) const {
  CVector w = vinv_ * rhs;
  for (Eigen::Index i = 0; i < d_.size(); ++i) {
    Complex den = d_(i) - lambda;
    if (std::abs(den) < 1e-14 * std::max(1.0, d_.cwiseAbs().maxCoeff()))
      throw SingularShift("shift coincides with an eigenvalue of the reference matrix");
    w(i) /= den;
  }
  return v_ * w;
}

CMatrix SpectralBase::solve(Complex lambda, const CMatrix& rhs) const {
  CMatrix out(rhs.rows(), rhs.cols());
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) out.col(c) = solve(lambda, CVector(rhs.col(c)));
  return out;
}

CVector SpectralBase::solve_adjoint(Complex lambda, const CVector& rhs) const {
  CVector w = v_.adjoint() * rhs;
  for (Eigen::Index i = 0; i < d_.size(); ++i) {
    Complex den = std::conj(d_(i) - lambda);
    if (std::abs(den) < 1e-14 * std::max(1.0, d_.cwiseAbs().maxCoeff()))
      throw SingularShift("shift coincides with an eigenvalue of the reference matrix");
    w(i) /= den;
  }
  return vinv_.adjoint() * w;
}

CMatrix SpectralBase::solve_adjoint(Complex lambda, const CMatrix& rhs) const {
  CMatrix out(rhs.rows(), rhs.cols());
  for (Eigen::Index c = 0; c < rhs.cols(); ++c)
    out.col(c) = solve_adjoint(lambda, CVector(rhs.col(c)));
  return out;
}

namespace {
template <class Exc>
void check_lu(const Eigen::PartialPivLU<CMatrix>& lu, const char* what) {
  if (lu.matrixLU().size() == 0) return;
  RVector d = lu.matrixLU().diagonal().cwiseAbs();
  double mn = d.minCoeff(), mx = d.maxCoeff();
  if (!(mn > 0.0) || mx / mn > kSingularCond) throw Exc(std::string(what) + " is numerically singular");
}
}  // namespace

SmwSolver::SmwSolver(const SpectralBase& base, Complex lambda, CMatrix u1, CMatrix sigma1,
                     CMatrix v1)
    : base_(base), lambda_(lambda), u1_(std::move(u1)), sigma1_(std::move(sigma1)), v1_(std::move(v1)) {
  if (u1_.cols() == 0) return;  // pure shifted solve
  xu_ = base_.solve(lambda_, u1_);
  CMatrix cap = sigma1_ + sigma1_ * (v1_.adjoint() * xu_) * sigma1_;
  cap_.compute(cap);
  check_lu<SingularCapacitance>(cap_, "SMW capacitance matrix");
  yv_ = base_.solve_adjoint(lambda_, v1_);
  CMatrix cap_adj = sigma1_.adjoint() + sigma1_.adjoint() * (u1_.adjoint() * yv_) * sigma1_.adjoint();
  cap_adj_.compute(cap_adj);
  check_lu<SingularCapacitance>(cap_adj_, "adjoint SMW capacitance matrix");
}

CVector SmwSolver::solve(const CVector& v) const {
  CVector t = base_.solve(lambda_, v);
  if (u1_.cols() == 0) return t;
  return t - xu_ * (sigma1_ * cap_.solve(sigma1_ * (v1_.adjoint() * t)));
}

CVector SmwSolver::solve_adjoint(const CVector& v) const {
  CVector t = base_.solve_adjoint(lambda_, v);
  if (u1_.cols() == 0) return t;
  return t - yv_ * (sigma1_.adjoint() * cap_adj_.solve(sigma1_.adjoint() * (u1_.adjoint() * t)));
}

CVector smw_solve(const SpectralBase& base, Complex lambda, const CMatrix& u1,
                  const CMatrix& sigma1, const CMatrix& v1, const CVector& v) {
  return SmwSolver(base, lambda, u1, sigma1, v1).solve(v);
}

GroupInverse::GroupInverse(const CMatrix& M, const EigenTriple& t) : x_(t.x) {
  if (!(t.r > 0)) throw SingularShift("group inverse: y^H x vanishes");
  z_ = t.y / t.r;
  CMatrix w = M - t.lambda * CMatrix::Identity(M.rows(), M.cols());
  w += t.y * t.x.adjoint();
  lu_ = std::make_shared<Eigen::PartialPivLU<CMatrix>>(w);
  check_lu<SingularShift>(*lu_, "(B + y x^H)");
}

GroupInverse::GroupInverse(const SpectralBase& base, double eps, const CMatrix& eu,
                           const CMatrix& et, const CMatrix& ev, const EigenTriple& t)
    : x_(t.x) {
  if (!(t.r > 0)) throw SingularShift("group inverse: y^H x vanishes");
  z_ = t.y / t.r;
  // F = eps E + y x^H, rank k+1
  const Eigen::Index k = eu.cols();
  CMatrix u1(eu.rows(), k + 1), v1(ev.rows(), k + 1);
  CMatrix s1 = CMatrix::Zero(k + 1, k + 1);
  u1.leftCols(k) = eu;
  u1.col(k) = t.y;
  v1.leftCols(k) = ev;
  v1.col(k) = t.x;
  s1.topLeftCorner(k, k) = eps * et;
  s1(k, k) = 1.0;
  smw_ = std::make_shared<SmwSolver>(base, t.lambda, u1, s1, v1);
}

CVector GroupInverse::apply(const CVector& v) const {
  CVector u = v - x_ * z_.dot(v);
  CVector w = lu_ ? lu_->solve(u) : smw_->solve(u);
  return w - x_ * z_.dot(w);
}

CVector GroupInverse::apply_adjoint(const CVector& v) const {
  CVector u = v - z_ * x_.dot(v);
  CVector w = lu_ ? lu_->adjoint().solve(u) : smw_->solve_adjoint(u);
  return w - z_ * x_.dot(w);
}

namespace {
template <class Factors, class Mat>
Factors rank_k_impl(const Mat& M, int k, double mu_pad_rel) {
  if (k < 1 || k > std::min(M.rows(), M.cols())) throw Error("best_rank_k: invalid rank");
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Factors f;
  f.U = svd.matrixU().leftCols(k);
  f.V = svd.matrixV().leftCols(k);
  RVector s = svd.singularValues().head(k);
  const double pad = mu_pad_rel * std::max(svd.singularValues()(0), 1.0);
  for (int i = 0; i < k; ++i)
    if (s(i) < pad) {
      s(i) = pad;
      f.rank_deficient = true;
    }
  f.T = s.template cast<typename Mat::Scalar>().asDiagonal();
  // zero input leaves the SVD bases undefined; fall back to canonical columns
  if ((f.U.adjoint() * f.U - Mat::Identity(k, k)).norm() > 1e-8) f.U = Mat::Identity(M.rows(), k);
  if ((f.V.adjoint() * f.V - Mat::Identity(k, k)).norm() > 1e-8) f.V = Mat::Identity(M.cols(), k);
  return f;
}
}  // namespace

RankFactors best_rank_k(const CMatrix& M, int k, double mu_pad_rel) {
  check_finite(M, "best_rank_k");
  return rank_k_impl<RankFactors>(M, k, mu_pad_rel);
}

RankFactorsReal best_rank_k(const RMatrix& M, int k, double mu_pad_rel) {
  if (!M.allFinite()) throw NonFinite("best_rank_k: non-finite entries");
  return rank_k_impl<RankFactorsReal>(M, k, mu_pad_rel);
}

CMatrix pinv_nullity_one(const CMatrix& B) {
  Eigen::JacobiSVD<CMatrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index n = svd.singularValues().size();
  CVector inv = CVector::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) inv(i) = 1.0 / svd.singularValues()(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace defect
