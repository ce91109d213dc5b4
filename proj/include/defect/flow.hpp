#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>

#include "defect/linalg.hpp"
#include "defect/perturbation.hpp"
#include "defect/types.hpp"

namespace defect {

struct FlowOptions {
  double tol_inner = 1e-8;          // stationary: ||rhs|| <= tol_inner * ||S_active||
  double stall_tol = 1e-8;          // per-step relative decrease of r, averaged over the window
  int stall_window = 50;            // accepted steps the stall must persist over
  double tol_coalesce = 1e-6;       // r at or below counts as coalescence
  int max_steps = 20000;
  double sigma = 1.4;               // stepsize ratio (> 1)
  double h0_scale = 0.1;            // h0 = h0_scale / ||scaled rhs magnitude||
  double h_min = 1e-16;
  double r_scale_threshold = 1e-2;  // activate the r^2 RHS scaling below this r
  double cond_t_max = 1e12;
  bool use_smw = false;             // group inverse through the SMW identity
  const SpectralBase* base = nullptr;  // required when use_smw
  EigOptions eig;
  std::ostream* trace = nullptr;    // per-step CSV: step,t,h,r,rhs_norm,lambda
};

struct Rank2Rhs {
  CMatrix Tdot, Udot, Vdot;
};
struct RankRealRhs {
  RMatrix Tdot, Udot, Vdot;
};

/// State of the inner gradient flow at fixed epsilon. Carries the eigentriple
/// of A + eps E, the group-inverse actions G^H x and G y that assemble the
/// free gradient S = y (Gy)^H + (G^H x) x^H, and the cached tangent RHS.
struct FlowState {
  double epsilon = 0;
  Perturbation E;
  EigenTriple triple;
  std::shared_ptr<const GroupInverse> ginv;
  CVector gx;  // G^H x
  CVector gy;  // G y
  double r = 0;
  double s_norm = 0;    // ||S_active||_F
  double rho = 0;       // Re<E, S_active>
  double rhs_norm = 0;  // tangent RHS norm, unscaled
  double scale = 1;     // RHS scaling factor in effect

  CMatrix rhs_dense;    // dense/pattern representations
  Rank2Rhs rhs2;        // factored complex
  RankRealRhs rhs_real; // factored real (rank 2 or 4)

  int step_count = 0;
  double t = 0;
  double h_current = 0;
};

enum class FlowStop { Stationary, StalledDecrease, StepsizeUnderflow, Coalesced, MaxSteps };
const char* to_string(FlowStop s);

struct FlowResult {
  FlowState state;
  FlowStop reason;
  int steps = 0;
};

/// Gradient flow of |y^H x| on the unit sphere of the admissible set, for one
/// matrix and structure. States are immutable values; a FlowProblem is safe
/// to use from several threads.
class FlowProblem {
 public:
  FlowProblem(CMatrix A, StructureMode mode, FlowOptions opts = {});

  const CMatrix& matrix() const { return a_; }
  const StructureMode& mode() const { return mode_; }
  const FlowOptions& options() const { return opts_; }

  /// Build a full state (eigentriple, group inverse, RHS) at A + eps E.
  FlowState make_state(double eps, Perturbation E, Complex target) const;

  /// One explicit Euler step of length h followed by retraction to the
  /// sphere/manifold and re-extraction of the tracked eigentriple.
  FlowState euler_step(const FlowState& st, double h) const;

  struct ControlResult {
    FlowState state;
    double h = 0;
    bool underflow = false;
  };
  /// Monotonicity-driven stepsize selection: reject and shrink by sigma while
  /// the step fails to decrease r; probe sigma*h for enlargement on success.
  ControlResult stepsize_control(const FlowState& st, double h_pred) const;

  /// Run the flow to a stationary point (or coalescence) of the structured
  /// gradient system.
  FlowResult integrate_to_stationary(double eps, Perturbation E0, Complex target) const;

  /// Steepest-descent start: negative structured gradient at E = 0, truncated
  /// to the active rank/pattern. Falls back to a seeded random direction when
  /// the gradient vanishes (e.g. normal matrices).
  Perturbation initial_perturbation(Complex target, std::uint64_t seed = 20240901u) const;

 private:
  void compute_rhs(FlowState& st) const;
  bool tracks_real_lambda(const Perturbation& e) const;

  CMatrix a_;
  StructureMode mode_;
  FlowOptions opts_;
};

/// Assembled dense structured gradient S_active at a state.
CMatrix free_gradient(const FlowState& st, const StructureMode& mode);

/// Dense RHS -S_active + Re<E,S_active> E.
CMatrix rhs_full(const FlowState& st, const StructureMode& mode);

/// Factored RHS of the rank-2 projected system (complex path).
Rank2Rhs rhs_rank2(const FlowState& st);

/// Factored RHS of the real projected system (rank 4 for complex eigenvalues,
/// rank 2 for real ones).
RankRealRhs rhs_rank4_real(const FlowState& st);

struct StationarityDiagnostics {
  double b_norm = 0;       // ||(I-UU^H) S_active (I-VV^H)||_F (factored reps)
  double s_norm = 0;       // ||S_active||_F
  double re_s_norm = 0;    // ||Re S||_F
  double res_prop = 0;     // || E - mu * S_active/||S_active|| ||_F
  double mu = 0;           // Re<E, S_active/||S_active||>, negative at minima
  double rhs_ratio = 0;    // ||rhs|| / ||S_active||
};
StationarityDiagnostics stationarity_diagnostics(const FlowState& st, const StructureMode& mode);

}  // namespace defect
