#pragma once

#include <optional>
#include <vector>

#include "pme/geometry.hpp"
#include "pme/stationary.hpp"

namespace pme {

enum class Variable { u, theta };

struct StepRecord {
  double stamp{};        ///< time (t or τ) at the end of the step
  double dt{};
  int newton_iterations{};
  double residual{};
  int halvings{};        ///< dt halvings needed before the step was accepted
  bool lifted{false};    ///< the ε pre-lift touched this step's input
};

/**
 * Stored snapshots of one run. `times` are t for Variable::u and τ = log t for
 * Variable::theta; `exponent` is m for u-runs and p for θ-runs.
 */
struct Trajectory {
  Grid grid;
  Variable variable{Variable::u};
  double exponent{};
  std::vector<double> times;
  std::vector<Field> fields;
  std::vector<StepRecord> step_log;

  std::size_t size() const { return times.size(); }
};

/**
 * Time-step policy. Fixed: every step has length dt. Geometric: step length
 * max(dt, (rho - 1) t), i.e. t_{k+1} = rho t_k once t >= dt/(rho - 1).
 * A snapshot is stored every `store_every` accepted steps and at t_end.
 */
struct Schedule {
  enum class Kind { fixed, geometric } kind{Kind::fixed};
  double dt{1e-3};
  double rho{1.05};
  int store_every{1};

  static Schedule fixed(double dt, int store_every = 1) { return {Kind::fixed, dt, 1.0, store_every}; }
  static Schedule geometric(double dt_min, double rho, int store_every = 1) {
    return {Kind::geometric, dt_min, rho, store_every};
  }
};

struct StepOptions {
  double rel_tol = 1e-12;        ///< ‖F‖∞ ≤ rel_tol·max(‖u_prev‖∞, tiny)
  int max_newton = 40;
  int max_halvings = 12;
  double degenerate_floor = 1e-12;
  /// Optional u -> max(u, lift) before each step. Stress tests only; 0 disables.
  double lift = 0.0;
};

/// Backward Euler for u_t = Δ(u^m) on [t_start, t_end], Newton per step with
/// projection onto u >= 0. Throws StepFailure, NegativityViolation.
Trajectory evolve_pme(const Grid& grid, double m, const Field& u0, double t_end,
                      const Schedule& schedule, const StepOptions& opts = {},
                      double t_start = 0.0);

enum class TimeScheme { backward_euler, bdf2 };

struct RescaledOptions {
  TimeScheme scheme = TimeScheme::bdf2;
  int store_every = 1;
  double rel_tol = 1e-13;
  int max_newton = 40;
  int max_halvings = 12;
};

/// Implicit integration of ∂_τ θ^p = Δθ + (p/(1-p)) θ^p on [tau_start, tau_end]
/// with step dtau. Throws PositivityLoss if θ reaches 0 in the interior.
Trajectory evolve_rescaled(const Grid& grid, double p, const Field& theta0, double tau_start,
                           double tau_end, double dtau, const RescaledOptions& opts = {});

/// First stored time at which min_i u_i/d_i^{1/m} > fraction · max_i u_i/d_i^{1/m}.
std::optional<double> detect_positivity_time(const Trajectory& traj, double fraction = 0.1);

struct OrderingReport {
  bool initially_ordered{};
  double max_violation{};  ///< max over nodes and stamps of u_A - u_B (0 if ordered)
  bool ordered{};          ///< max_violation <= slack (only meaningful if initially ordered)
};

/// Checks u_A(·,0) <= u_B(·,0) ⇒ u_A <= u_B at every stored stamp, up to `slack`.
/// Throws IncompatibleTrajectories on grid, stamp or exponent mismatch.
OrderingReport compare_ordering(const Trajectory& a, const Trajectory& b, double slack);

/// The slack 10·h² used by the comparison and universal-bound checks.
inline double discretisation_slack(const Grid& grid) { return 10.0 * grid.h * grid.h; }

/// Trajectory restricted to stamps in [lo, hi].
Trajectory slice(const Trajectory& traj, double lo, double hi);

/**
 * u-form run up to t_handoff followed by the θ-form run in τ = log t up to
 * tau_end. The two pieces share the snapshot at t_handoff.
 */
struct LongRun {
  Trajectory early;    ///< Variable::u on [0, t_handoff]
  Trajectory rescaled; ///< Variable::theta on [log t_handoff, tau_end]
};

LongRun evolve_long(const Grid& grid, double m, const Field& u0, double t_handoff,
                    const Schedule& early_schedule, double tau_end, double dtau,
                    const RescaledOptions& late = {});

}  // namespace pme
