#include "defect/outer.hpp"

#include <chrono>
#include <cmath>

#include "defect/init.hpp"
#include "defect/util.hpp"

namespace defect {

REval r_of_eps(const FlowProblem& problem, double eps,
               const std::optional<Perturbation>& warm, Complex target) {
  if (!(eps > 0)) throw Error("r_of_eps: eps must be positive");
  Perturbation e0 = warm ? *warm : problem.initial_perturbation(target);
  FlowResult res = problem.integrate_to_stationary(eps, std::move(e0), target);
  if (res.reason == FlowStop::MaxSteps) {
    // the state is still a valid upper bound for r(eps); the stationarity
    // guard in r_prime decides whether it can drive a Newton step
    double ratio = res.state.s_norm > 0 ? res.state.rhs_norm / res.state.s_norm : 0.0;
    logf(LogLevel::Warn, "inner flow hit the step limit at eps=%g (rhs ratio %g)", eps, ratio);
  }
  REval out;
  out.coalesced = res.reason == FlowStop::Coalesced;
  out.r = res.state.r;
  out.flow = std::move(res);
  logf(LogLevel::Info, "  flow at eps=%.12g: r=%.12g stop=%s steps=%d rhs_ratio=%.3g", eps,
       out.r, to_string(out.flow.reason), out.flow.steps,
       out.flow.state.s_norm > 0 ? out.flow.state.rhs_norm / out.flow.state.s_norm : 0.0);
  return out;
}

double r_prime(const FlowState& st, const StructureMode& mode, double not_stationary_tol) {
  if (!(st.r > 0)) throw NotStationary("r_prime: r vanished");
  StationarityDiagnostics d = stationarity_diagnostics(st, mode);
  if (d.res_prop > not_stationary_tol)
    throw NotStationary("r_prime: state is not stationary (residual " +
                        std::to_string(d.res_prop) + ")");

  CMatrix ed = st.E.to_dense();
  CVector ex = ed * st.triple.x;
  Complex t1 = st.triple.x.dot(st.ginv->apply(ex));   // x^H G E x
  Complex t2 = st.triple.y.dot(ed * st.gy);           // y^H E G y
  double rp = st.r * (t1 + t2).real();

  double rp_concise = -st.r * st.s_norm;  // valid at the stationary point
  if (std::abs(rp) > 0 && std::abs(rp - rp_concise) > 0.05 * std::abs(rp))
    logf(LogLevel::Warn, "r' cross-check mismatch: %.6e vs %.6e", rp, rp_concise);
  return rp;
}

PuiseuxStep puiseux_step(double eps_k, double r_k, double rprime_k, double delta) {
  double ar = std::abs(rprime_k);
  if (ar < 1e-300) throw DegenerateDerivative("puiseux_step: r' is numerically zero");
  PuiseuxStep s;
  s.gamma = std::sqrt(2.0 * r_k * ar);
  s.eps_star = eps_k + r_k / (2.0 * ar);
  s.eps_next = s.eps_star - delta * delta / (s.gamma * s.gamma);
  return s;
}

PuiseuxDiagnostics puiseux_diagnostics(const CMatrix& A, const FlowState& st,
                                       const StructureMode& mode) {
  const Eigen::Index n = A.rows();
  CMatrix m = A + st.epsilon * st.E.to_dense();
  CMatrix bp = pinv_nullity_one(m - st.triple.lambda * CMatrix::Identity(n, n));
  PuiseuxDiagnostics d;
  d.c_abs = std::abs(st.triple.y.dot(bp * st.triple.x));
  double rp = 0.0;
  try {
    rp = r_prime(st, mode);
  } catch (const NotStationary&) {
    rp = -st.r * st.s_norm;
  }
  d.rr_prime = st.r * rp;
  d.ratio = d.c_abs > 0 ? d.rr_prime / (-2.0 * d.c_abs) : 0.0;
  return d;
}

DistanceReport solve_distance(const CMatrix& A, const StructureMode& mode,
                              const OuterOptions& opts, Complex target) {
  auto t_begin = std::chrono::steady_clock::now();
  if (opts.delta < 0 || !(opts.tol > 0)) throw Error("solve_distance: need delta >= 0, tol > 0");
  const double delta_eff = std::max(opts.delta, opts.tol);
  if (opts.delta < opts.tol)
    logf(LogLevel::Info, "delta below tol: solving with delta_eff = %g and extrapolating eps^{0,*}",
         delta_eff);

  FlowOptions fopts = opts.flow;
  fopts.tol_coalesce = opts.tol;
  std::optional<SpectralBase> base_storage;
  if (opts.use_smw) {
    base_storage.emplace(A);
    fopts.use_smw = true;
    fopts.base = &*base_storage;
  }
  FlowProblem problem(A, mode, fopts);

  double eps0 = opts.eps0;
  if (!(eps0 > 0)) {
    CoalescenceCandidate c = candidate(A, mode);
    eps0 = c.score;
    logf(LogLevel::Info, "auto eps0 = %g from candidate pair score", eps0);
  }
  double eps_lo = opts.eps_lo;
  double eps_hi = opts.eps_hi;
  if (!(eps_hi > 0)) {
    UpperBoundResult ub = upper_bound(A, mode);
    eps_hi = std::min(std::isfinite(ub.bound) ? ub.bound : std::numeric_limits<double>::infinity(),
                      10.0 * eps0);
    logf(LogLevel::Info, "auto eps_hi = %g (bound %g)", eps_hi, ub.bound);
  }
  if (!(eps_lo >= 0) || !(eps_lo < eps0) || !(eps0 < eps_hi))
    throw Error("solve_distance: need 0 <= eps_lo < eps0 < eps_hi");

  DistanceReport rep;
  rep.mode = mode;
  rep.delta = opts.delta;
  rep.tol = opts.tol;

  std::optional<Perturbation> warm;
  Complex track = target;
  double eps_k = eps0;
  double last_gamma = 0, last_eps_star = 0;
  std::optional<FlowState> final_state;

  for (int k = 0; k < opts.max_outer; ++k) {
    REval ev = r_of_eps(problem, eps_k, warm, track);
    // a coalesced end state is nearly defective; restarting the next flow from
    // it drags through a saddle plateau, so fall back to the steepest-descent
    // start there
    if (opts.warm_start && !ev.coalesced) {
      warm = ev.flow.state.E;
      track = ev.flow.state.triple.lambda;
    } else {
      warm.reset();
    }

    OuterIterate it;
    it.k = k;
    it.epsilon = eps_k;
    it.r = ev.r;
    it.coalesced = ev.coalesced;
    rep.iterates.push_back(it);
    logf(LogLevel::Info, "k=%d eps=%.15g r=%.15g%s", k, eps_k, ev.r,
         ev.coalesced ? " (coalesced)" : "");

    if (!ev.coalesced && std::abs(ev.r - delta_eff) < opts.tol) {
      rep.converged = true;
      rep.eps_delta_star = eps_k;
      final_state = ev.flow.state;
      break;
    }

    // bracket update: eps is a lower bound while r stays above the target level
    if (ev.r > delta_eff) {
      eps_lo = eps_k;
    } else {
      eps_hi = eps_k;
      if (!ev.coalesced && ev.r > opts.tol)
        logf(LogLevel::Warn,
             "iterate with tol < r=%g <= delta: bracketing on delta (Algorithm-1 line 4 "
             "compares against tol)",
             ev.r);
    }

    double eps_next;
    bool used_bisection = true;
    if (!ev.coalesced) {
      try {
        double rp = r_prime(ev.flow.state, mode, opts.not_stationary_tol);
        PuiseuxStep ps = puiseux_step(eps_k, ev.r, rp, delta_eff);
        rep.iterates.back().gamma = ps.gamma;
        rep.iterates.back().eps_star = ps.eps_star;
        last_gamma = ps.gamma;
        last_eps_star = ps.eps_star;
        if (ps.eps_next > eps_lo && ps.eps_next < eps_hi) {
          eps_next = ps.eps_next;
          used_bisection = false;
        } else {
          eps_next = eps_lo + opts.theta * (eps_hi - eps_lo);
        }
      } catch (const Error& err) {
        logf(LogLevel::Warn, "Puiseux step unavailable at k=%d: %s", k, err.what());
        eps_next = eps_lo + opts.theta * (eps_hi - eps_lo);
      }
    } else {
      eps_next = eps_lo + opts.theta * (eps_hi - eps_lo);
    }
    rep.iterates.back().used_bisection = used_bisection;

    if (!std::isfinite(eps_next))
      throw BracketExhausted("next eps is not finite (unbounded bracket)");
    if (eps_hi - eps_lo < 1e-15)
      throw BracketExhausted("bracket narrower than 1e-15 without meeting the tolerance");
    eps_k = eps_next;
  }
  if (!rep.converged) throw MaxOuterIterations("outer iteration limit reached");

  // final extrapolation of the defectivity distance from the converged iterate
  try {
    double rp = r_prime(*final_state, mode, opts.not_stationary_tol);
    PuiseuxStep ps = puiseux_step(rep.eps_delta_star, final_state->r, rp, delta_eff);
    rep.gamma = ps.gamma;
    rep.eps_zero_star = ps.eps_star;
  } catch (const Error& err) {
    logf(LogLevel::Warn, "final extrapolation unavailable: %s", err.what());
    rep.gamma = last_gamma;
    rep.eps_zero_star = last_eps_star > 0 ? last_eps_star : rep.eps_delta_star;
  }

  rep.tracked_lambda = final_state->triple.lambda;
  rep.stationarity = stationarity_diagnostics(*final_state, mode);
  rep.puiseux = puiseux_diagnostics(A, *final_state, mode);

  // coalescing pair: the two eigenvalues of the perturbed matrix nearest the
  // tracked one
  {
    CMatrix m = A + rep.eps_delta_star * final_state->E.to_dense();
    CVector vals;
    {
      Eigen::ComplexEigenSolver<CMatrix> es(m);
      vals = es.eigenvalues();
    }
    std::vector<std::pair<double, Complex>> by_dist;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      by_dist.emplace_back(std::abs(vals(i) - rep.tracked_lambda), vals(i));
    std::sort(by_dist.begin(), by_dist.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    rep.coalescing_lambdas[0] = by_dist.size() > 0 ? by_dist[0].second : Complex(0, 0);
    rep.coalescing_lambdas[1] = by_dist.size() > 1 ? by_dist[1].second : Complex(0, 0);
  }

  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return rep;
}

}  // namespace defect
