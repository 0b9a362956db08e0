#include "pme/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "pme/error.hpp"
#include "pme/tridiagonal.hpp"

namespace pme {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// One backward Euler step U + dt (-Δ_h) U^m = U_prev. Returns false if Newton fails.
struct PmeStepper {
  const Laplacian& lap;
  double m;
  const StepOptions& opts;

  struct Result {
    bool ok{false};
    int iterations{0};
    double residual{0};
    double min_unclamped{0};
  };

  Field residual(std::span<const double> u, std::span<const double> prev, double dt) const {
    Field um(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) um[i] = std::pow(u[i], m);
    Field f = lap.apply(um);
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i] + dt * f[i] - prev[i];
    return f;
  }

  // Magnitude of the largest term in F, used to scale the tolerance.
  double scale(std::span<const double> u, std::span<const double> prev, double dt) const {
    double s = max_abs(prev);
    for (std::size_t i = 0; i < u.size(); ++i)
      s = std::max(s, dt * lap.diag[i] / lap.volume[i] * std::pow(u[i], m));
    return std::max(s, std::numeric_limits<double>::min());
  }

  Result step(Field& u, std::span<const double> prev, double dt) const {
    const std::size_t n = u.size();
    Result res;
    Field f = residual(u, prev, dt);
    for (int it = 0; it < opts.max_newton; ++it) {
      const double tol = opts.rel_tol * scale(u, prev, dt);
      res.residual = max_abs(f);
      if (res.residual <= tol) {
        res.ok = true;
        res.iterations = it;
        return res;
      }
      Tridiagonal jac(n);
      std::vector<double> c(n);
      for (std::size_t i = 0; i < n; ++i)
        c[i] = u[i] < opts.degenerate_floor ? 0.0 : m * std::pow(u[i], m - 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        jac.diag[i] = 1.0 + dt * lap.diag[i] / lap.volume[i] * c[i];
        if (i + 1 < n) {
          jac.upper[i] = dt * lap.off[i] / lap.volume[i] * c[i + 1];
          jac.lower[i] = dt * lap.off[i] / lap.volume[i + 1] * c[i];
        }
      }
      Field rhs(n);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = -f[i];
      const Field delta = solve_pivoted(jac, rhs);

      const double f2 = norm2(f);
      double lambda = 1.0;
      bool accepted = false;
      Field trial(n);
      for (int b = 0; b < 30; ++b, lambda *= 0.5) {
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          const double v = u[i] + lambda * delta[i];
          lowest = std::min(lowest, v);
          trial[i] = std::max(v, 0.0);
        }
        Field ft = residual(trial, prev, dt);
        const double ft2 = norm2(ft);
        if (ft2 < f2 || max_abs(ft) <= tol) {
          u.swap(trial);
          f.swap(ft);
          res.min_unclamped = lowest;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // Stagnation at roundoff: accept if the update is already negligible.
        if (max_abs(delta) <= 1e3 * kEps * max_abs(u)) {
          res.ok = true;
          res.iterations = it;
          res.residual = max_abs(f);
          return res;
        }
        return res;
      }
    }
    return res;
  }
};

void validate_u0(const Grid& grid, const Field& u0) {
  if (u0.size() != grid.n()) throw InvalidArgument("initial data does not match the grid");
  bool nonzero = false;
  for (double v : u0) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("initial data must be finite and >= 0");
    nonzero = nonzero || v > 0.0;
  }
  if (!nonzero) throw InvalidArgument("initial data is identically zero");
}

}  // namespace

Trajectory evolve_pme(const Grid& grid, double m, const Field& u0, double t_end,
                      const Schedule& schedule, const StepOptions& opts, double t_start) {
  if (!(m > 1.0)) throw InvalidArgument(fmt::format("m must exceed 1, got {}", m));
  if (!(t_end > t_start)) throw InvalidArgument("t_end must exceed the start time");
  if (!(schedule.dt > 0.0)) throw InvalidArgument("schedule dt must be positive");
  if (schedule.kind == Schedule::Kind::geometric && !(schedule.rho > 1.0 && schedule.rho <= 1.2))
    throw InvalidArgument(fmt::format("geometric ratio must lie in (1, 1.2], got {}", schedule.rho));
  validate_u0(grid, u0);

  const Laplacian lap = build_laplacian(grid);
  const PmeStepper stepper{lap, m, opts};

  Trajectory traj;
  traj.grid = grid;
  traj.variable = Variable::u;
  traj.exponent = m;
  traj.times.push_back(t_start);
  traj.fields.push_back(u0);

  Field u = u0;
  double t = t_start;
  int accepted = 0;
  while (t < t_end) {
    double dt = schedule.dt;
    if (schedule.kind == Schedule::Kind::geometric) dt = std::max(dt, (schedule.rho - 1.0) * t);
    if (t + dt >= t_end || t_end - (t + dt) < 1e-9 * dt) dt = t_end - t;

    bool lifted = false;
    Field prev = u;
    if (opts.lift > 0.0) {
      for (double& v : prev) {
        if (v < opts.lift) {
          v = opts.lift;
          lifted = true;
        }
      }
    }

    int halvings = 0;
    PmeStepper::Result res;
    Field next;
    for (;;) {
      next = prev;
      res = stepper.step(next, prev, dt);
      if (res.ok) break;
      if (++halvings > opts.max_halvings)
        throw StepFailure(fmt::format("backward Euler step at t={} failed after {} halvings "
                                      "(residual {:.3e})", t, opts.max_halvings, res.residual));
      dt *= 0.5;
    }
    const double umax = max_abs(next);
    if (res.min_unclamped < -10.0 * kEps * std::max(umax, 1.0))
      throw NegativityViolation(fmt::format("accepted state dipped to {:.3e} at t={}",
                                            res.min_unclamped, t + dt));
    u.swap(next);
    t = (dt == t_end - t) ? t_end : t + dt;
    ++accepted;
    traj.step_log.push_back({t, dt, res.iterations, res.residual, halvings, lifted});
    if (accepted % std::max(schedule.store_every, 1) == 0 || t >= t_end) {
      traj.times.push_back(t);
      traj.fields.push_back(u);
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------

namespace {

struct RescaledStepper {
  const Laplacian& lap;
  double p;
  double k;
  const RescaledOptions& opts;

  // F(θ) = a0 (θ^p - G)/dτ + (-Δ_h θ) - k θ^p
  Field residual(std::span<const double> th, std::span<const double> g, double a0,
                 double dtau) const {
    Field f = lap.apply(th);
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double tp = std::pow(th[i], p);
      f[i] += a0 * (tp - g[i]) / dtau - k * tp;
    }
    return f;
  }

  bool step(Field& th, std::span<const double> g, double a0, double dtau, int& iters,
            double& resid) const {
    const std::size_t n = th.size();
    Field f = residual(th, g, a0, dtau);
    bool polished = false;
    for (int it = 0; it < opts.max_newton; ++it) {
      Tridiagonal jac(n);
      for (std::size_t i = 0; i < n; ++i) {
        jac.diag[i] = lap.diag[i] / lap.volume[i] + p * std::pow(th[i], p - 1.0) * (a0 / dtau - k);
        if (i + 1 < n) {
          jac.upper[i] = lap.off[i] / lap.volume[i];
          jac.lower[i] = lap.off[i] / lap.volume[i + 1];
        }
      }
      Field rhs(n);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = -f[i];
      const Field delta = solve_pivoted(jac, rhs);

      const double f2 = norm2(f);
      double lambda = 1.0;
      bool accepted = false;
      Field trial(n);
      for (int b = 0; b < 40; ++b, lambda *= 0.5) {
        bool positive = true;
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = th[i] + lambda * delta[i];
          positive = positive && trial[i] > 0.0;
        }
        if (!positive) continue;
        Field ft = residual(trial, g, a0, dtau);
        if (norm2(ft) <= f2 || lambda == 1.0) {
          th.swap(trial);
          f.swap(ft);
          accepted = true;
          break;
        }
      }
      if (!accepted) return false;
      resid = max_abs(f);
      if (polished) {
        iters = it + 1;
        return true;
      }
      // One extra full step after convergence: the deviation from the steady
      // state can be many orders below θ itself.
      if (lambda == 1.0 && max_abs(delta) <= opts.rel_tol * max_abs(th)) polished = true;
    }
    return false;
  }
};

}  // namespace

Trajectory evolve_rescaled(const Grid& grid, double p, const Field& theta0, double tau_start,
                           double tau_end, double dtau, const RescaledOptions& opts) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(fmt::format("p must lie in (0,1), got {}", p));
  if (theta0.size() != grid.n()) throw InvalidArgument("initial data does not match the grid");
  if (!(tau_end > tau_start) || !(dtau > 0.0)) throw InvalidArgument("invalid τ interval or step");
  for (double v : theta0)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("rescaled flow needs strictly positive initial data");

  const Laplacian lap = build_laplacian(grid);
  const RescaledStepper stepper{lap, p, p / (1.0 - p), opts};
  const std::size_t n = grid.n();

  Trajectory traj;
  traj.grid = grid;
  traj.variable = Variable::theta;
  traj.exponent = p;
  traj.times.push_back(tau_start);
  traj.fields.push_back(theta0);

  const auto nsteps = static_cast<long>(std::ceil((tau_end - tau_start) / dtau - 1e-9));
  const double step = (tau_end - tau_start) / static_cast<double>(nsteps);

  Field cur = theta0, older;
  Field g(n);
  for (long s = 1; s <= nsteps; ++s) {
    const double tau = s == nsteps ? tau_end : tau_start + static_cast<double>(s) * step;
    const bool bdf2 = opts.scheme == TimeScheme::bdf2 && !older.empty();

    Field next(cur);
    int iters = 0;
    double resid = 0.0;
    bool ok = false;
    if (bdf2) {
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = (4.0 * std::pow(cur[i], p) - std::pow(older[i], p)) / 3.0;
        const double guess = 2.0 * cur[i] - older[i];
        next[i] = guess > 0.0 ? guess : cur[i];
      }
      ok = stepper.step(next, g, 1.5, step, iters, resid);
    } else {
      for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(cur[i], p);
      ok = stepper.step(next, g, 1.0, step, iters, resid);
    }

    int halvings = 0;
    if (!ok) {
      // Fall back to 2^k backward Euler sub-steps over the same interval.
      for (halvings = 1; halvings <= opts.max_halvings && !ok; ++halvings) {
        const long sub = 1L << halvings;
        next = cur;
        ok = true;
        for (long j = 0; j < sub && ok; ++j) {
          for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(next[i], p);
          ok = stepper.step(next, g, 1.0, step / static_cast<double>(sub), iters, resid);
        }
      }
      if (!ok)
        throw StepFailure(fmt::format("rescaled step at τ={} failed after {} halvings", tau,
                                      opts.max_halvings));
      --halvings;
    }
    if (*std::min_element(next.begin(), next.end()) <= 0.0)
      throw PositivityLoss(fmt::format("θ lost positivity at τ={}", tau));

    older.swap(cur);
    cur.swap(next);
    traj.step_log.push_back({tau, step, iters, resid, halvings, false});
    if (s % std::max(opts.store_every, 1) == 0 || s == nsteps) {
      traj.times.push_back(tau);
      traj.fields.push_back(cur);
    }
  }
  return traj;
}

std::optional<double> detect_positivity_time(const Trajectory& traj, double fraction) {
  if (traj.variable != Variable::u) throw InvalidArgument("positivity time needs a u-trajectory");
  const Field d = boundary_distance(traj.grid);
  const double inv_m = 1.0 / traj.exponent;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double q = traj.fields[k][i] / std::pow(d[i], inv_m);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (hi > 0.0 && lo > fraction * hi) return traj.times[k];
  }
  return std::nullopt;
}

OrderingReport compare_ordering(const Trajectory& a, const Trajectory& b, double slack) {
  if (a.grid.n() != b.grid.n() || a.grid.h != b.grid.h || a.grid.kind != b.grid.kind ||
      a.grid.dim != b.grid.dim)
    throw IncompatibleTrajectories("trajectories live on different grids");
  if (a.variable != b.variable || a.exponent != b.exponent)
    throw IncompatibleTrajectories("trajectories solve different equations");
  if (a.size() != b.size()) throw IncompatibleTrajectories("trajectories have different stamps");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k])))
      throw IncompatibleTrajectories("trajectories have different stamps");

  OrderingReport rep;
  rep.initially_ordered = true;
  for (std::size_t i = 0; i < a.grid.n(); ++i)
    rep.initially_ordered = rep.initially_ordered && a.fields[0][i] <= b.fields[0][i];
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a.grid.n(); ++i)
      rep.max_violation = std::max(rep.max_violation, a.fields[k][i] - b.fields[k][i]);
  rep.ordered = rep.max_violation <= slack;
  return rep;
}

Trajectory slice(const Trajectory& traj, double lo, double hi) {
  Trajectory out;
  out.grid = traj.grid;
  out.variable = traj.variable;
  out.exponent = traj.exponent;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] >= lo && traj.times[k] <= hi) {
      out.times.push_back(traj.times[k]);
      out.fields.push_back(traj.fields[k]);
    }
  }
  for (const auto& rec : traj.step_log)
    if (rec.stamp >= lo && rec.stamp <= hi) out.step_log.push_back(rec);
  return out;
}

LongRun evolve_long(const Grid& grid, double m, const Field& u0, double t_handoff,
                    const Schedule& early_schedule, double tau_end, double dtau,
                    const RescaledOptions& late) {
  LongRun run;
  run.early = evolve_pme(grid, m, u0, t_handoff, early_schedule);
  const Field& u = run.early.fields.back();
  const double p = 1.0 / m;
  const double scale = std::pow(t_handoff, m / (m - 1.0));
  Field theta0(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    theta0[i] = scale * std::pow(u[i], m);
    if (!(theta0[i] > 0.0))
      throw PositivityLoss(fmt::format("hand-off at t={} precedes positivity", t_handoff));
  }
  run.rescaled = evolve_rescaled(grid, p, theta0, std::log(t_handoff), tau_end, dtau, late);
  return run;
}

}  // namespace pme
