#include "defect/flow.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "defect/util.hpp"

namespace defect {
namespace {

void check_cond_t(const CMatrix& t, double cond_max) {
  Eigen::JacobiSVD<CMatrix> svd(t);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 0) || s(0) / s(s.size() - 1) > cond_max)
    throw IllConditionedT("factored core T is ill conditioned");
}

void check_cond_t(const RMatrix& t, double cond_max) {
  Eigen::JacobiSVD<RMatrix> svd(t);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 0) || s(0) / s(s.size() - 1) > cond_max)
    throw IllConditionedT("factored core T is ill conditioned");
}

double cond_of(const RMatrix& t) {
  Eigen::JacobiSVD<RMatrix> svd(t);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

double cond_of(const CMatrix& t) {
  Eigen::JacobiSVD<CMatrix> svd(t);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

// Thin QR with the R diagonal made real positive, so the retraction is
// deterministic.
void thin_qr(const CMatrix& m, CMatrix& q, CMatrix& r) {
  const Eigen::Index k = m.cols();
  Eigen::HouseholderQR<CMatrix> qr(m);
  q = qr.householderQ() * CMatrix::Identity(m.rows(), k);
  r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i) {
    double a = std::abs(r(i, i));
    if (!(a > 1e-300)) throw RankCollapse("retraction produced rank-deficient factors");
    Complex ph = r(i, i) / a;
    q.col(i) *= ph;
    r.row(i) *= std::conj(ph);
  }
}

void thin_qr(const RMatrix& m, RMatrix& q, RMatrix& r) {
  const Eigen::Index k = m.cols();
  Eigen::HouseholderQR<RMatrix> qr(m);
  q = qr.householderQ() * RMatrix::Identity(m.rows(), k);
  r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i) {
    double a = std::abs(r(i, i));
    if (!(a > 1e-300)) throw RankCollapse("retraction produced rank-deficient factors");
    if (r(i, i) < 0) {
      q.col(i) = -q.col(i);
      r.row(i) = -r.row(i);
    }
  }
}

bool triple_is_real(const EigenTriple& t) {
  return t.lambda.imag() == 0.0 && t.x.imag().isZero(0.0) && t.y.imag().isZero(0.0);
}

struct Rank2Eval {
  Rank2Rhs rhs;
  double rho = 0, s_norm = 0, rhs_norm = 0;
};

Rank2Eval eval_rank2(const FlowState& st, double cond_t_max) {
  const CMatrix &u = st.E.U, &t = st.E.T, &v = st.E.V;
  check_cond_t(t, cond_t_max);
  const CVector &x = st.triple.x, &y = st.triple.y, &a = st.gx, &b = st.gy;
  CVector p = u.adjoint() * y, q = v.adjoint() * x;
  CVector rv = u.adjoint() * a, sv = v.adjoint() * b;

  Rank2Eval e;
  e.rho = (sv.dot(t.adjoint() * p) + q.dot(t.adjoint() * rv)).real();
  CMatrix tinv = t.inverse();
  e.rhs.Tdot = -(p * sv.adjoint() + rv * q.adjoint()) + e.rho * t;
  e.rhs.Udot = -((y - u * p) * sv.adjoint() + (a - u * rv) * q.adjoint()) * tinv;
  e.rhs.Vdot = -((b - v * sv) * p.adjoint() + (x - v * q) * rv.adjoint()) * tinv.adjoint();

  double s2 = a.squaredNorm() + b.squaredNorm() + 2.0 * (y.dot(a) * x.dot(b)).real();
  e.s_norm = std::sqrt(std::max(s2, 0.0));
  // gauge conditions make the three tangent pieces mutually orthogonal
  e.rhs_norm = std::sqrt((e.rhs.Udot * t).squaredNorm() + e.rhs.Tdot.squaredNorm() +
                         (e.rhs.Vdot * t.adjoint()).squaredNorm());
  return e;
}

struct RankRealEval {
  RankRealRhs rhs;
  double rho = 0, s_norm = 0, rhs_norm = 0;
};

// Factored real system. For a genuinely complex eigenvalue the driving
// gradient is Re(S) = Y W^T + Z X^T with two columns per factor; for a real
// eigenvalue the same formulas apply with single-column factors.
RankRealEval eval_rank_real(const FlowState& st, double cond_t_max) {
  const RMatrix &u = st.E.Ur, &t = st.E.Tr, &v = st.E.Vr;
  check_cond_t(t, cond_t_max);
  const Eigen::Index n = u.rows();
  const int m = triple_is_real(st.triple) ? 1 : 2;
  RMatrix xf(n, m), yf(n, m), wf(n, m), zf(n, m);
  xf.col(0) = st.triple.x.real();
  yf.col(0) = st.triple.y.real();
  wf.col(0) = st.gy.real();
  zf.col(0) = st.gx.real();
  if (m == 2) {
    xf.col(1) = st.triple.x.imag();
    yf.col(1) = st.triple.y.imag();
    wf.col(1) = st.gy.imag();
    zf.col(1) = st.gx.imag();
  }

  RMatrix pf = u.transpose() * yf, qf = v.transpose() * xf;
  RMatrix rf = u.transpose() * zf, sf = v.transpose() * wf;

  RankRealEval e;
  e.rho = (sf.transpose() * t.transpose() * pf).trace() +
          (qf.transpose() * t.transpose() * rf).trace();
  RMatrix tinv = t.inverse();
  e.rhs.Tdot = -(pf * sf.transpose() + rf * qf.transpose()) + e.rho * t;
  e.rhs.Udot = -((yf - u * pf) * sf.transpose() + (zf - u * rf) * qf.transpose()) * tinv;
  e.rhs.Vdot = -((wf - v * sf) * pf.transpose() + (xf - v * qf) * rf.transpose()) * tinv.transpose();

  double s2 = ((yf.transpose() * yf) * (wf.transpose() * wf)).trace() +
              2.0 * ((yf.transpose() * zf) * (xf.transpose() * wf)).trace() +
              ((zf.transpose() * zf) * (xf.transpose() * xf)).trace();
  e.s_norm = std::sqrt(std::max(s2, 0.0));
  e.rhs_norm = std::sqrt((e.rhs.Udot * t).squaredNorm() + e.rhs.Tdot.squaredNorm() +
                         (e.rhs.Vdot * t.transpose()).squaredNorm());
  return e;
}

struct DenseEval {
  CMatrix rhs;
  double rho = 0, s_norm = 0, rhs_norm = 0;
};

DenseEval eval_dense(const FlowState& st, const StructureMode& mode) {
  CMatrix s = st.triple.y * st.gy.adjoint() + st.gx * st.triple.x.adjoint();
  CMatrix sact = apply_structure(s, mode);
  DenseEval e;
  e.rho = st.E.dense.conjugate().cwiseProduct(sact).sum().real();
  e.rhs = -sact + e.rho * st.E.dense;
  e.s_norm = sact.norm();
  e.rhs_norm = e.rhs.norm();
  return e;
}

}  // namespace

const char* to_string(FlowStop s) {
  switch (s) {
    case FlowStop::Stationary: return "stationary";
    case FlowStop::StalledDecrease: return "stalled-decrease";
    case FlowStop::StepsizeUnderflow: return "stepsize-underflow";
    case FlowStop::Coalesced: return "coalesced";
    case FlowStop::MaxSteps: return "max-steps";
  }
  return "?";
}

CMatrix free_gradient(const FlowState& st, const StructureMode& mode) {
  CMatrix s = st.triple.y * st.gy.adjoint() + st.gx * st.triple.x.adjoint();
  return apply_structure(s, mode);
}

CMatrix rhs_full(const FlowState& st, const StructureMode& mode) {
  CMatrix sact = free_gradient(st, mode);
  CMatrix ed = st.E.to_dense();
  double rho = ed.conjugate().cwiseProduct(sact).sum().real();
  return -sact + rho * ed;
}

Rank2Rhs rhs_rank2(const FlowState& st) {
  if (st.E.rep != Perturbation::Rep::Factored || st.E.real)
    throw Error("rhs_rank2: state is not complex-factored");
  return eval_rank2(st, 1e12).rhs;
}

RankRealRhs rhs_rank4_real(const FlowState& st) {
  if (st.E.rep != Perturbation::Rep::Factored || !st.E.real)
    throw Error("rhs_rank4_real: state is not real-factored");
  return eval_rank_real(st, 1e12).rhs;
}

FlowProblem::FlowProblem(CMatrix A, StructureMode mode, FlowOptions opts)
    : a_(std::move(A)), mode_(std::move(mode)), opts_(opts) {
  check_finite(a_, "flow matrix");
  if (a_.rows() != a_.cols()) throw Error("flow matrix must be square");
  if (mode_.real() && !is_real(a_)) throw Error("real structure requires a real matrix");
  if (mode_.patterned() &&
      (mode_.pattern.rows() != a_.rows() || mode_.pattern.cols() != a_.cols()))
    throw Error("pattern mask size mismatch");
  if (!(opts_.sigma > 1.0)) throw Error("stepsize ratio sigma must exceed 1");
}

FlowState FlowProblem::make_state(double eps, Perturbation E, Complex target) const {
  FlowState st;
  st.epsilon = eps;
  E.renormalize();
  st.E = std::move(E);

  CMatrix m = a_ + eps * st.E.to_dense();
  EigOptions eo = opts_.eig;
  eo.force_real = mode_.real();
  st.triple = nearest_triple(m, target, eo);

  if (opts_.use_smw && opts_.base && st.E.rep == Perturbation::Rep::Factored) {
    CMatrix eu = st.E.real ? complexify(st.E.Ur) : st.E.U;
    CMatrix et = st.E.real ? complexify(st.E.Tr) : st.E.T;
    CMatrix ev = st.E.real ? complexify(st.E.Vr) : st.E.V;
    st.ginv = std::make_shared<GroupInverse>(*opts_.base, eps, eu, et, ev, st.triple);
  } else {
    st.ginv = std::make_shared<GroupInverse>(m, st.triple);
  }
  st.gx = st.ginv->apply_adjoint(st.triple.x);
  st.gy = st.ginv->apply(st.triple.y);
  st.r = st.triple.r;
  st.scale = st.r < opts_.r_scale_threshold ? st.r * st.r : 1.0;
  compute_rhs(st);
  return st;
}

void FlowProblem::compute_rhs(FlowState& st) const {
  if (st.E.rep == Perturbation::Rep::Factored) {
    if (st.E.real) {
      auto e = eval_rank_real(st, opts_.cond_t_max);
      st.rhs_real = std::move(e.rhs);
      st.rho = e.rho;
      st.s_norm = e.s_norm;
      st.rhs_norm = e.rhs_norm;
    } else {
      auto e = eval_rank2(st, opts_.cond_t_max);
      st.rhs2 = std::move(e.rhs);
      st.rho = e.rho;
      st.s_norm = e.s_norm;
      st.rhs_norm = e.rhs_norm;
    }
  } else {
    auto e = eval_dense(st, mode_);
    st.rhs_dense = std::move(e.rhs);
    st.rho = e.rho;
    st.s_norm = e.s_norm;
    st.rhs_norm = e.rhs_norm;
  }
}

FlowState FlowProblem::euler_step(const FlowState& st, double h) const {
  const double hs = h * st.scale;
  Perturbation e = st.E;
  if (e.rep == Perturbation::Rep::Factored) {
    if (e.real) {
      RMatrix ut = e.Ur + hs * st.rhs_real.Udot;
      RMatrix vt = e.Vr + hs * st.rhs_real.Vdot;
      RMatrix tt = e.Tr + hs * st.rhs_real.Tdot;
      RMatrix qu, ru, qv, rv;
      thin_qr(ut, qu, ru);
      thin_qr(vt, qv, rv);
      e.Ur = qu;
      e.Vr = qv;
      e.Tr = ru * tt * rv.transpose();
      if (cond_of(e.Tr) > opts_.cond_t_max) {
        auto f = best_rank_k(RMatrix(e.Ur * e.Tr * e.Vr.transpose()), e.k());
        logf(LogLevel::Debug, "re-factored ill-conditioned real T");
        e = Perturbation::factored(std::move(f));
      }
    } else {
      CMatrix ut = e.U + hs * st.rhs2.Udot;
      CMatrix vt = e.V + hs * st.rhs2.Vdot;
      CMatrix tt = e.T + hs * st.rhs2.Tdot;
      CMatrix qu, ru, qv, rv;
      thin_qr(ut, qu, ru);
      thin_qr(vt, qv, rv);
      e.U = qu;
      e.V = qv;
      e.T = ru * tt * rv.adjoint();
      if (cond_of(e.T) > opts_.cond_t_max) {
        auto f = best_rank_k(CMatrix(e.U * e.T * e.V.adjoint()), e.k());
        logf(LogLevel::Debug, "re-factored ill-conditioned complex T");
        e = Perturbation::factored(std::move(f));
      }
    }
  } else {
    e.dense = st.E.dense + hs * st.rhs_dense;
  }
  FlowState out = make_state(st.epsilon, std::move(e), st.triple.lambda);
  out.step_count = st.step_count + 1;
  out.t = st.t + h;
  out.h_current = h;
  return out;
}

FlowProblem::ControlResult FlowProblem::stepsize_control(const FlowState& st,
                                                         double h_pred) const {
  double h = h_pred;
  for (;;) {
    if (h < opts_.h_min) return {st, h, true};
    bool ok = true;
    FlowState cand;
    try {
      cand = euler_step(st, h);
    } catch (const Error& err) {
      logf(LogLevel::Debug, "step of size %g rejected: %s", h, err.what());
      ok = false;
    }
    if (ok && cand.r < st.r) {
      if (h >= st.h_current) {
        // probe a larger step and keep it when it decreases r at least as much
        try {
          FlowState probe = euler_step(st, opts_.sigma * h);
          if (probe.r <= cand.r) {
            cand = std::move(probe);
            h *= opts_.sigma;
          }
        } catch (const Error&) {
        }
      }
      cand.h_current = h;
      return {std::move(cand), h, false};
    }
    h /= opts_.sigma;
  }
}

FlowResult FlowProblem::integrate_to_stationary(double eps, Perturbation E0,
                                                Complex target) const {
  E0.renormalize();
  FlowState st = make_state(eps, std::move(E0), target);
  double h = opts_.h0_scale / std::max(st.scale * st.s_norm, 1e-300);
  st.h_current = h;
  if (opts_.trace) *opts_.trace << "step,t,h,r,rhs_norm,lambda_re,lambda_im\n";

  // sliding window of r values for the slow-tail exit
  const int w = std::max(opts_.stall_window, 1);
  std::vector<double> rwin(static_cast<size_t>(w), st.r);

  for (int steps = 0; steps < opts_.max_steps; ++steps) {
    if (st.r <= opts_.tol_coalesce) return {std::move(st), FlowStop::Coalesced, steps};
    if (st.rhs_norm <= opts_.tol_inner * st.s_norm)
      return {std::move(st), FlowStop::Stationary, steps};

    ControlResult res = stepsize_control(st, h);
    if (res.underflow) return {std::move(st), FlowStop::StepsizeUnderflow, steps};

    // keep the effective step continuous across the r^2 scaling switch
    double adj = st.scale / res.state.scale;
    h = res.h * std::min(adj, 1e6);

    st = std::move(res.state);
    if (opts_.trace)
      *opts_.trace << st.step_count << ',' << st.t << ',' << st.h_current << ',' << st.r << ','
                   << st.rhs_norm << ',' << st.triple.lambda.real() << ','
                   << st.triple.lambda.imag() << '\n';

    double r_window_ago = rwin[static_cast<size_t>(steps % w)];
    rwin[static_cast<size_t>(steps % w)] = st.r;
    if (steps >= w && r_window_ago - st.r <= w * opts_.stall_tol * st.r)
      return {std::move(st), FlowStop::StalledDecrease, steps + 1};
  }
  return {std::move(st), FlowStop::MaxSteps, opts_.max_steps};
}

Perturbation FlowProblem::initial_perturbation(Complex target, std::uint64_t seed) const {
  EigOptions eo = opts_.eig;
  eo.force_real = mode_.real();
  EigenTriple t = nearest_triple(a_, target, eo);
  GroupInverse g(a_, t);
  CVector gx = g.apply_adjoint(t.x);
  CVector gy = g.apply(t.y);
  CMatrix s = t.y * gy.adjoint() + gx * t.x.adjoint();
  CMatrix sact = apply_structure(s, mode_);

  const Eigen::Index n = a_.rows();
  CMatrix dir;
  if (sact.norm() > 1e-14) {
    dir = -sact / sact.norm();
  } else {
    // gradient vanishes (e.g. normal matrix): seeded random start
    std::mt19937_64 gen = rng(seed);
    std::normal_distribution<double> nd;
    CMatrix z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        z(i, j) = mode_.real() ? Complex(nd(gen), 0.0) : Complex(nd(gen), nd(gen));
    dir = apply_structure(z, mode_);
    dir /= dir.norm();
  }

  if (mode_.patterned()) return Perturbation::pattern(dir, mode_.pattern, mode_.real());
  if (mode_.real()) {
    bool lam_real = t.lambda.imag() == 0.0;
    int k = static_cast<int>(std::min<Eigen::Index>(lam_real ? 2 : 4, n));
    return Perturbation::factored(best_rank_k(RMatrix(dir.real()), k));
  }
  int k = static_cast<int>(std::min<Eigen::Index>(2, n));
  return Perturbation::factored(best_rank_k(dir, k));
}

StationarityDiagnostics stationarity_diagnostics(const FlowState& st,
                                                 const StructureMode& mode) {
  CMatrix s = st.triple.y * st.gy.adjoint() + st.gx * st.triple.x.adjoint();
  CMatrix sact = apply_structure(s, mode);
  CMatrix ed = st.E.to_dense();

  StationarityDiagnostics d;
  d.s_norm = sact.norm();
  d.re_s_norm = s.real().norm();
  d.rhs_ratio = d.s_norm > 0 ? st.rhs_norm / d.s_norm : 0.0;
  if (d.s_norm > 0) {
    CMatrix shat = sact / d.s_norm;
    d.mu = ed.conjugate().cwiseProduct(shat).sum().real();
    d.res_prop = (ed - d.mu * shat).norm();
  }
  if (st.E.rep == Perturbation::Rep::Factored) {
    const Eigen::Index n = ed.rows();
    CMatrix u = st.E.real ? complexify(st.E.Ur) : st.E.U;
    CMatrix v = st.E.real ? complexify(st.E.Vr) : st.E.V;
    CMatrix pu = CMatrix::Identity(n, n) - u * u.adjoint();
    CMatrix pv = CMatrix::Identity(n, n) - v * v.adjoint();
    d.b_norm = (pu * sact * pv).norm();
  }
  return d;
}

}  // namespace defect
