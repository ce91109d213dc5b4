#include "defect/oracle.hpp"

#include <cmath>
#include <random>

#include "defect/util.hpp"

namespace defect {
namespace oracle {
namespace {

CMatrix gaussian(Eigen::Index n, bool real, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  CMatrix z(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      z(i, j) = real ? Complex(nd(gen), 0.0) : Complex(nd(gen), nd(gen));
  return z;
}

double r_along(const CMatrix& A, double eps, const CMatrix& e0, const CMatrix& d, double t,
               Complex target) {
  CMatrix e = e0 + t * d;
  e /= e.norm();
  return nearest_triple(A + eps * e, target).r;
}

// Squared distance from A to the affine family lambda I + theta u q^H, which
// is a real-linear subspace spanned by orthonormal {I/sqrt(2), iI/sqrt(2),
// u q^H, i u q^H} (theta, lambda complex) or {I/sqrt(2), u q^T} (real case).
double slice_dist2_complex(const CMatrix& A, const CVector& u, const CVector& q, double a2) {
  Complex pI = (A(0, 0) + A(1, 1)) / std::sqrt(2.0);  // <I/sqrt2, A>
  Complex pu = (u.adjoint() * A * q).value();         // <u q^H, A> = u^H A q
  return a2 - std::norm(pI) - std::norm(pu);
}

double slice_dist2_real(const RMatrix& A, const RVector& u, const RVector& q, double a2) {
  double pI = (A(0, 0) + A(1, 1)) / std::sqrt(2.0);
  double pu = u.dot(A * q);
  return a2 - pI * pI - pu * pu;
}

}  // namespace

double fd_directional(const CMatrix& A, double eps, const Perturbation& E, const CMatrix& D,
                      const StructureMode& mode, Complex target, double fd_step) {
  CMatrix sd = apply_structure(D, mode);
  CMatrix e0 = E.to_dense();
  double rp = r_along(A, eps, e0, sd, fd_step, target);
  double rm = r_along(A, eps, e0, sd, -fd_step, target);
  return (rp - rm) / (2.0 * fd_step);
}

double brute_force_2x2(const CMatrix& A, const StructureMode& mode, const OracleConfig& cfg) {
  if (A.rows() != 2 || A.cols() != 2) throw Error("brute_force_2x2: matrix must be 2x2");
  const double a2 = A.squaredNorm();

  if (mode.kind == StructureMode::RealFull) {
    if (!is_real(A)) throw Error("brute_force_2x2: real mode needs a real matrix");
    RMatrix ar = A.real();
    auto dist2 = [&](double alpha) {
      RVector u(2), q(2);
      u << std::cos(alpha), std::sin(alpha);
      q << -u(1), u(0);
      return slice_dist2_real(ar, u, q, a2);
    };
    double lo = 0.0, hi = M_PI, best_a = 0.0, best = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 6; ++pass) {
      int npts = cfg.search_resolution;
      for (int i = 0; i <= npts; ++i) {
        double al = lo + (hi - lo) * i / npts;
        double d2 = dist2(al);
        if (d2 < best) {
          best = d2;
          best_a = al;
        }
      }
      double w = (hi - lo) / npts;
      lo = best_a - 2 * w;
      hi = best_a + 2 * w;
    }
    return std::sqrt(std::max(best, 0.0));
  }

  if (mode.kind != StructureMode::ComplexFull)
    throw Error("brute_force_2x2: only full complex/real modes");
  auto dist2 = [&](double alpha, double beta) {
    CVector u(2), q(2);
    u << Complex(std::cos(alpha), 0.0), std::sin(alpha) * std::exp(Complex(0.0, beta));
    q << -std::conj(u(1)), std::conj(u(0));
    return slice_dist2_complex(A, u, q, a2);
  };
  double alo = 0.0, ahi = M_PI / 2, blo = 0.0, bhi = 2 * M_PI;
  double best = std::numeric_limits<double>::infinity(), ba = 0, bb = 0;
  for (int pass = 0; pass < 6; ++pass) {
    int npts = cfg.search_resolution;
    for (int i = 0; i <= npts; ++i)
      for (int j = 0; j <= npts; ++j) {
        double al = alo + (ahi - alo) * i / npts;
        double be = blo + (bhi - blo) * j / npts;
        double d2 = dist2(al, be);
        if (d2 < best) {
          best = d2;
          ba = al;
          bb = be;
        }
      }
    double wa = (ahi - alo) / npts, wb = (bhi - blo) / npts;
    alo = ba - 2 * wa;
    ahi = ba + 2 * wa;
    blo = bb - 2 * wb;
    bhi = bb + 2 * wb;
  }
  return std::sqrt(std::max(best, 0.0));
}

CMatrix dense_reference_rhs(const FlowState& st, const StructureMode& mode) {
  CMatrix sact = free_gradient(st, mode);
  CMatrix ed = st.E.to_dense();
  double rho = ed.conjugate().cwiseProduct(sact).sum().real();
  if (st.E.rep == Perturbation::Rep::Factored) {
    const Eigen::Index n = ed.rows();
    CMatrix u = st.E.real ? complexify(st.E.Ur) : st.E.U;
    CMatrix v = st.E.real ? complexify(st.E.Vr) : st.E.V;
    CMatrix pu = CMatrix::Identity(n, n) - u * u.adjoint();
    CMatrix pv = CMatrix::Identity(n, n) - v * v.adjoint();
    CMatrix projected = sact - pu * sact * pv;
    return -projected + rho * ed;
  }
  return -sact + rho * ed;
}

CMatrix reconstruct_factored_rhs(const FlowState& st) {
  if (st.E.rep != Perturbation::Rep::Factored)
    throw Error("reconstruct_factored_rhs: state is not factored");
  if (st.E.real) {
    const RMatrix &u = st.E.Ur, &t = st.E.Tr, &v = st.E.Vr;
    const RankRealRhs& d = st.rhs_real;
    return complexify(d.Udot * t * v.transpose() + u * d.Tdot * v.transpose() +
                      u * t * d.Vdot.transpose());
  }
  const CMatrix &u = st.E.U, &t = st.E.T, &v = st.E.V;
  const Rank2Rhs& d = st.rhs2;
  return d.Udot * t * v.adjoint() + u * d.Tdot * v.adjoint() + u * t * d.Vdot.adjoint();
}

Perturbation random_unit_perturbation(Eigen::Index n, const StructureMode& mode,
                                      std::uint64_t seed) {
  std::mt19937_64 gen = rng(seed);
  CMatrix z = apply_structure(gaussian(n, mode.real(), gen), mode);
  z /= z.norm();
  if (mode.patterned()) return Perturbation::pattern(z, mode.pattern, mode.real());
  return Perturbation::dense_full(z, mode.real());
}

CMatrix random_tangent(const Perturbation& E, const StructureMode& mode, std::uint64_t seed) {
  std::mt19937_64 gen = rng(seed);
  CMatrix z = apply_structure(gaussian(E.n(), mode.real(), gen), mode);
  CMatrix ed = E.to_dense();
  double ip = ed.conjugate().cwiseProduct(z).sum().real();
  z -= ip * ed;  // Re<z, E> = 0
  z /= z.norm();
  return z;
}

CMatrix random_matrix(Eigen::Index n, bool real, std::uint64_t seed) {
  std::mt19937_64 gen = rng(seed);
  return gaussian(n, real, gen);
}

}  // namespace oracle
}  // namespace defect
