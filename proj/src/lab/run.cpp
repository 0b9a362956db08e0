#include "pme/lab/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "pme/error.hpp"
#include "pme/regularity.hpp"
#include "tables.hpp"

namespace pme::lab {

bool RunRecord::checks_pass() const {
  for (const Check& c : checks)
    if (!c.pass()) return false;
  return true;
}

int RunRecord::exit_code() const {
  if (failed) return 3;
  return checks_pass() ? 0 : 4;
}

namespace {

namespace fs = std::filesystem;

class RunContext {
public:
  RunContext(const ExperimentConfig& cfg, RunRecord& rec) : cfg_(cfg), rec_(rec) {}

  void emit(Experiment e, const std::string& name, const Table& t, bool plot = true) {
    write_csv(cfg_.output_dir / name, t);
    rec_.artifacts.push_back({to_string(e), name});
    if (plot) {
      const std::string dat = fs::path(name).replace_extension(".dat").string();
      write_dat(cfg_.output_dir / dat, t);
      rec_.artifacts.push_back({to_string(e), dat});
    }
  }

  void emit(Experiment e, const std::string& name, const Trajectory& traj) {
    write_trajectory(cfg_.output_dir / name, traj);
    rec_.artifacts.push_back({to_string(e), name});
  }

  void note(const std::string& key, double value) { rec_.summary.emplace_back(key, value); }
  void check(Check c) { rec_.checks.push_back(std::move(c)); }

  void count_steps(const Trajectory& traj) {
    for (const StepRecord& s : traj.step_log) {
      ++rec_.steps.steps;
      rec_.steps.newton_iterations += std::size_t(s.newton_iterations);
      rec_.steps.halvings += std::size_t(s.halvings);
    }
  }

private:
  const ExperimentConfig& cfg_;
  RunRecord& rec_;
};

Field initial_data(const ExperimentConfig& cfg, const StationaryProfile& profile) {
  const InitialConfig& in = cfg.initial;
  switch (in.kind) {
    case InitialConfig::Kind::separable:
      return detail::separable_solution(profile, in.s, 0.0);
    case InitialConfig::Kind::bump:
      return detail::bump(profile.grid, in.center, in.width, in.height);
    case InitialConfig::Kind::profile: {
      Field u(profile.s_profile);
      for (double& v : u) v *= in.c;
      return u;
    }
    case InitialConfig::Kind::file: {
      Table t;
      try {
        t = read_csv(in.path);
      } catch (const InvalidArgument& e) {
        throw ConfigInvalid(e.what());
      }
      if (t.rows.size() != profile.grid.n())
        throw ConfigInvalid(fmt::format("{} holds {} rows for {} nodes", in.path, t.rows.size(),
                                        profile.grid.n()));
      Field u;
      for (const auto& row : t.rows) u.push_back(row.back());
      return u;
    }
  }
  return {};
}

struct Trajectories {
  std::optional<Trajectory> u;
  std::optional<Trajectory> theta;
};

Trajectories resume(const ExperimentConfig& cfg, const Grid& grid) {
  Trajectories out;
  const fs::path u = cfg.resume_from / "trajectory.csv";
  const fs::path th = cfg.resume_from / "trajectory_rescaled.csv";
  if (!fs::exists(u) && !fs::exists(th))
    throw ConfigInvalid(fmt::format("{} holds no trajectories", cfg.resume_from.string()));
  try {
    if (fs::exists(u)) out.u = read_trajectory(u, grid, Variable::u, cfg.m);
    if (fs::exists(th)) out.theta = read_trajectory(th, grid, Variable::theta, 1.0 / cfg.m);
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid(e.what());
  }
  return out;
}

Schedule early_schedule(const ExperimentConfig& cfg) {
  const ScheduleConfig& s = cfg.schedule;
  return s.kind == Schedule::Kind::fixed ? Schedule::fixed(s.dt, s.store_every)
                                         : Schedule::geometric(s.dt, s.rho, s.store_every);
}

void execute(const ExperimentConfig& cfg, RunContext& ctx) {
  const Grid grid = make_grid(cfg);
  const double p = 1.0 / cfg.m;
  const bool want_traj = cfg.wants(Experiment::evolve) ||
                         (cfg.wants(Experiment::asymptotics) && cfg.resume_from.empty());

  const StationaryProfile profile = solve_theta(grid, p, cfg.tol.stationary);
  if (cfg.wants(Experiment::stationary)) {
    ctx.emit(Experiment::stationary, "profile.csv", detail::profile_table(profile));
    double tmax = 0.0;
    for (double v : profile.theta) tmax = std::max(tmax, v);
    ctx.note("theta_max", tmax);
    ctx.note("boundary_slope", profile.slope_a);
    ctx.note("norm_theta", profile.norm_theta);
    ctx.check(at_most("stationary/oracle_sup_error", cfg.tol.oracle,
                      detail::sup_error(profile, detail::theta_oracle_for(grid, p))));
  }

  std::optional<EigenSystem> sys;
  if (cfg.wants(Experiment::spectrum) || cfg.wants(Experiment::asymptotics)) {
    sys = solve_eigenpairs(assemble_linearized(profile), cfg.asymptotics.K, cfg.tol.eigen);
    if (cfg.wants(Experiment::spectrum)) {
      ctx.emit(Experiment::spectrum, "spectrum.csv", detail::spectrum_table(*sys), false);
      for (std::size_t j = 0; j < sys->K(); ++j) ctx.note(fmt::format("mu_{}", j + 1), sys->mus[j]);
      ctx.note("gamma", spectral_gap_gamma(*sys).gamma);
      ctx.check(near("spectrum/mu_1", p, cfg.tol.mu, sys->mus[0]));
      if (!grid.radial()) {
        const double mu2 = 3.0 * p / (1.0 - p);
        ctx.check(at_most("spectrum/mu_2_relative_error", cfg.tol.mu2_rel,
                          std::abs(sys->mus[1] - mu2) / mu2));
      }
      ctx.check(at_most("spectrum/gram_defect", 1e-8, sys->gram_defect));
    }
  }

  Trajectories traj;
  if (want_traj) {
    const Field u0 = initial_data(cfg, profile);
    StepOptions so;
    so.rel_tol = cfg.tol.step;
    if (cfg.wants(Experiment::asymptotics)) {
      RescaledOptions ro;
      ro.store_every = cfg.asymptotics.store_every;
      LongRun lr = evolve_long(grid, cfg.m, u0, cfg.asymptotics.t_handoff, early_schedule(cfg),
                               cfg.asymptotics.tau_end, cfg.asymptotics.dtau, ro);
      traj.u = std::move(lr.early);
      traj.theta = std::move(lr.rescaled);
    } else {
      traj.u = evolve_pme(grid, cfg.m, u0, cfg.schedule.t_end, early_schedule(cfg), so);
    }
    ctx.emit(Experiment::evolve, "trajectory.csv", *traj.u);
    ctx.count_steps(*traj.u);
    if (traj.theta) {
      ctx.emit(Experiment::evolve, "trajectory_rescaled.csv", *traj.theta);
      ctx.count_steps(*traj.theta);
    }
    if (const auto tp = detect_positivity_time(*traj.u)) ctx.note("positivity_time", *tp);

    if (cfg.initial.kind == InitialConfig::Kind::separable) {
      // Compare at the last stored stamp of the run (θ-leg if present).
      double t = traj.u->times.back();
      Field u = traj.u->fields.back();
      if (traj.theta) {
        t = std::exp(traj.theta->times.back());
        const double scale = std::pow(t, -cfg.m / (cfg.m - 1.0));
        u = traj.theta->fields.back();
        for (double& v : u) v = std::pow(scale * v, p);
      }
      const double err =
          detail::relative_sup_error(u, detail::separable_solution(profile, cfg.initial.s, t));
      ctx.note("separable_error", err);
      ctx.check(at_most("evolve/separable_relative_error", cfg.tol.separable, err));
    }
  } else if (!cfg.resume_from.empty()) {
    traj = resume(cfg, grid);
  }

  if (cfg.wants(Experiment::asymptotics)) {
    if (!traj.theta) throw ConfigInvalid("asymptotics needs a rescaled trajectory");
    AsymptoticsOptions ao;
    ao.K = cfg.asymptotics.K;
    ao.fit_lo = cfg.asymptotics.fit_lo;
    ao.fit_hi = cfg.asymptotics.fit_hi;
    ao.tail_lo = cfg.asymptotics.tail_lo;
    ao.tail_hi = cfg.asymptotics.tail_hi;
    if (!sys) sys = solve_eigenpairs(assemble_linearized(profile), cfg.asymptotics.K, cfg.tol.eigen);
    const AsymptoticsReport rep = analyze_asymptotics(*traj.theta, profile, *sys, ao);
    ctx.emit(Experiment::asymptotics, "asymptotics.csv", detail::asymptotics_table(rep));
    for (std::size_t j = 0; j < rep.modes.c.size(); ++j) ctx.note(fmt::format("c_{}", j + 1), rep.modes.c[j]);
    ctx.note("A_1", rep.A1);
    ctx.note("tau_star", rep.tau_star);
    ctx.note("gamma", rep.gamma);
    ctx.note("slope_deviation", rep.fit_deviation.slope);
    ctx.note("slope_remainder", rep.fit_remainder.slope);
    ctx.note("slope_N", rep.fit_N.slope);
    ctx.check(near("asymptotics/deviation_slope", -1.0, cfg.tol.rate, rep.fit_deviation.slope));
    ctx.check(near("asymptotics/remainder_slope", -(1.0 + rep.gamma), cfg.tol.rate,
                   rep.fit_remainder.slope));
    ctx.check(at_most("asymptotics/N_slope", -2.0 + cfg.tol.rate, rep.fit_N.slope));
    if (want_traj && cfg.initial.kind == InitialConfig::Kind::separable)
      ctx.check(near("asymptotics/tau_star", cfg.initial.s, cfg.tol.shift * cfg.initial.s,
                     rep.tau_star));
  }

  if (cfg.wants(Experiment::regularity)) {
    const ExpansionFit fit = fit_boundary_expansion(profile.theta, grid);
    const double k = p / (1.0 - p);
    const double coef = k / ((1.0 + p) * (2.0 + p));
    const double ratio = std::abs(fit.b) / std::pow(fit.a, p);
    ctx.note("boundary_q", fit.q);
    ctx.note("boundary_coefficient", ratio);
    const DecayFit d3 = third_derivative_blowup(
        grid.radial() ? singular_part(profile.theta, grid, fit) : profile.theta, grid);
    ctx.note("third_derivative_slope", d3.slope);
    if (!grid.radial()) {
      ctx.check(near("regularity/exponent", 2.0 + p, cfg.tol.exponent * (2.0 + p), fit.q));
      ctx.check(near("regularity/coefficient", coef, cfg.tol.exponent * coef, ratio));
      ctx.check(near("regularity/third_derivative_slope", p - 1.0, cfg.tol.rate / 4.0, d3.slope));
    }
    if (traj.theta) {
      const double lo = std::exp(cfg.asymptotics.fit_lo), hi = std::exp(cfg.asymptotics.fit_hi);
      for (int ell : {1, 2}) {
        const DecayFit d = time_derivative_decay(*traj.theta, ell, lo, hi);
        const double target = -cfg.m / (cfg.m - 1.0) - ell;
        ctx.note(fmt::format("time_derivative_slope_{}", ell), d.slope);
        ctx.check(near(fmt::format("regularity/time_derivative_{}", ell), target,
                       cfg.tol.rate * (ell == 1 ? 1.0 : 1.5), d.slope));
      }
    }
  }
}

void write_run_json(const RunRecord& rec) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["format"] = kRunFormat;
  j["config_hash"] = fmt::format("{:016x}", rec.config_hash);
  j["config"] = rec.config_text;
  j["status"] = rec.failed ? "failed" : (rec.checks_pass() ? "passed" : "acceptance_failed");
  if (rec.failed) j["failure"] = rec.failure;
  j["wall_seconds"] = rec.wall_seconds;
  j["steps"] = {{"steps", rec.steps.steps},
                {"newton_iterations", rec.steps.newton_iterations},
                {"halvings", rec.steps.halvings}};
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : rec.summary) summary[k] = v;
  j["summary"] = summary;
  ordered_json checks = ordered_json::array();
  for (const Check& c : rec.checks)
    checks.push_back({{"criterion", c.criterion},
                      {"target", c.target},
                      {"measured", c.measured},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass()}});
  j["checks"] = checks;
  ordered_json files = ordered_json::array();
  for (const Artifact& a : rec.artifacts)
    files.push_back({{"experiment", a.experiment}, {"path", a.path.string()}});
  j["artifacts"] = files;
  std::ofstream out(rec.config.output_dir / "run.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

}  // namespace

RunRecord run(const ExperimentConfig& cfg) {
  validate(cfg);
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  {
    std::ofstream probe(cfg.output_dir / ".write-probe");
    if (ec || !probe)
      throw ConfigInvalid(fmt::format("output directory {} is not writable", cfg.output_dir.string()));
  }
  fs::remove(cfg.output_dir / ".write-probe", ec);
  fs::remove(cfg.output_dir / "FAILED", ec);

  RunRecord rec;
  rec.config = cfg;
  rec.config_text = serialize(cfg);
  rec.config_hash = config_hash(cfg);
  const auto start = std::chrono::steady_clock::now();
  RunContext ctx(cfg, rec);
  try {
    execute(cfg, ctx);
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const Error& e) {
    rec.failed = true;
    rec.failure = e.what();
    std::ofstream(cfg.output_dir / "FAILED") << e.what() << '\n';
    rec.artifacts.push_back({"run", "FAILED"});
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_report(cfg.output_dir / "report.csv", rec.checks);
  rec.artifacts.push_back({"run", "report.csv"});
  write_run_json(rec);
  return rec;
}

}  // namespace pme::lab
