#include "pme/lab/battery.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "pme/asymptotics.hpp"
#include "pme/error.hpp"
#include "pme/regularity.hpp"
#include "tables.hpp"

namespace pme::lab {

namespace fs = std::filesystem;

BatteryTolerances default_battery_tolerances() {
  return {
      {"c1.sup_error", 1e-4},      {"c1.order", 1.8},
      {"c2.mu1", 1e-3},            {"c2.psi", 1e-3},
      {"c3.mu2_rel", 1e-2},        {"c3.correlation", 0.999},
      {"c4.error", 1e-3},          {"c4.order_tol", 0.15},
      {"c5.slope_tol", 0.05},      {"c6.remainder_tol", 0.2},
      {"c6.N_slope", -1.8},        {"c7.rel", 0.05},
      {"c8.q_rel", 0.02},          {"c8.coef_rel", 0.02},
      {"c8.d3_tol", 0.05},         {"c8.holder_bounded", 1.1},
      {"c8.holder_growth", 2.0},   {"c9.l1_tol", 0.2},
      {"c9.l2_tol", 0.3},          {"c10.gram", 1e-8},
      {"c11.factor", 2.0},         {"c11.consistency", 0.15},
  };
}

const std::vector<std::string>& criterion_names() {
  static const std::vector<std::string> names = {
      "stationary_oracle",  "first_eigenpair", "second_eigenvalue",     "separable_solution",
      "stability_rate",     "improved_rate",   "shift_recovery",        "boundary_exponent",
      "time_derivative_decay", "structural_invariants", "radial_smoke"};
  return names;
}

bool CriterionResult::pass() const {
  if (!error.empty() || checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

bool BatteryReport::pass() const {
  return !criteria.empty() &&
         std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass(); });
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PME_LAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min(n, unsigned(cap));
  }
  n = std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1));
  return std::max(n, 1u);
}

namespace {

using Checks = std::map<int, std::vector<Check>>;

struct Env {
  const BatteryTolerances& tol;
  fs::path dir;  // empty: no output
  std::uint64_t seed{};
  Checks& out;

  double operator[](const std::string& key) const { return tol.at(key); }

  void add(int id, Check c) { out[id].push_back(std::move(c)); }

  void csv(const std::string& name, const Table& t) const {
    if (!dir.empty()) write_csv(dir / name, t);
  }
};

std::string label(int id, const std::string& check) {
  return fmt::format("{}.{}/{}", id, criterion_names()[std::size_t(id - 1)], check);
}

constexpr double kPs[] = {0.3, 0.5, 0.7};

double order_between(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

StationaryProfile profile_on(GridKind kind, int dim, std::size_t n, double p) {
  return solve_theta(build_grid(kind, dim, 1.0, n), p, 1e-10);
}

// Sup error at N = 800 against the oracle and the order on the interior half.
void oracle_study(Env& env, int id, GridKind kind, int dim, double factor) {
  const double order_min = 2.0 - factor * (2.0 - env["c1.order"]);
  for (double p : kPs) {
    const Grid coarse = build_grid(kind, dim, 1.0, 200);
    const auto exact = detail::theta_oracle_for(coarse, p);
    Table conv{{"N", "h", "sup_error", "interior_error"}, {}};
    for (std::size_t n : {200, 400, 800}) {
      const StationaryProfile prof = profile_on(kind, dim, n, p);
      conv.rows.push_back({double(n), prof.grid.h, detail::sup_error(prof, exact),
                           detail::sup_error(prof, exact, 0.25)});
      if (n == 800) env.csv(fmt::format("profile_p{}.csv", p), detail::profile_table(prof));
    }
    env.csv(fmt::format("convergence_p{}.csv", p), conv);
    const auto& r = conv.rows;
    env.add(id, at_most(label(id, fmt::format("sup_error[p={}]", p)), factor * env["c1.sup_error"],
                        r[2][2]));
    env.add(id, at_least(label(id, fmt::format("interior_order[p={}]", p)), order_min,
                         order_between(r[1][3], r[2][3], r[1][1], r[2][1])));
  }
}

double weighted_distance(const EigenSystem& sys, std::span<const double> a, std::span<const double> b) {
  Field d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return std::sqrt(sys.inner(d, d));
}

void first_pair_checks(Env& env, int id, const StationaryProfile& prof, const EigenSystem& sys,
                       double factor) {
  const double p = prof.p;
  Field unit(prof.theta);
  const double nrm = std::sqrt(sys.inner(unit, unit));
  for (double& v : unit) v /= nrm;
  env.add(id, near(label(id, fmt::format("mu_1[p={}]", p)), p, factor * env["c2.mu1"], sys.mus[0]));
  env.add(id, at_most(label(id, fmt::format("psi_1_distance[p={}]", p)), factor * env["c2.psi"],
                      weighted_distance(sys, sys.psis[0], unit)));
}

void eigen_study(Env& env) {
  for (double p : kPs) {
    const StationaryProfile prof = profile_on(GridKind::interval, 1, 800, p);
    const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4, 1e-9);
    env.csv(fmt::format("spectrum_p{}.csv", p), detail::spectrum_table(sys));
    first_pair_checks(env, 2, prof, sys, 1.0);

    const double mu2 = 3.0 * p / (1.0 - p);
    env.add(3, at_most(label(3, fmt::format("mu_2_relative_error[p={}]", p)), env["c3.mu2_rel"],
                       std::abs(sys.mus[1] - mu2) / mu2));
    // Θ Θ' with central differences and the zero boundary values.
    const std::size_t n = prof.theta.size();
    Field f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? prof.theta[i - 1] : 0.0;
      const double right = i + 1 < n ? prof.theta[i + 1] : 0.0;
      f[i] = prof.theta[i] * (right - left) / (2.0 * prof.grid.h);
    }
    const double corr = std::abs(sys.inner(sys.psis[1], f)) /
                        std::sqrt(sys.inner(sys.psis[1], sys.psis[1]) * sys.inner(f, f));
    env.add(3, at_least(label(3, fmt::format("correlation_theta_dtheta[p={}]", p)),
                        env["c3.correlation"], corr));
  }
}

void separable_study(Env& env, int id, GridKind kind, int dim, double factor) {
  const StationaryProfile prof = profile_on(kind, dim, 400, 0.5);
  const Field exact = detail::separable_solution(prof, 1.0, 10.0);
  Table errs{{"dt", "error"}, {}};
  for (double dt : {2e-3, 1e-3}) {
    const int per_unit = int(std::lround(1.0 / dt));
    const Trajectory tr = evolve_pme(prof.grid, 2.0, prof.s_profile, 10.0, Schedule::fixed(dt, per_unit));
    const double err = detail::relative_sup_error(tr.fields.back(), exact);
    errs.rows.push_back({dt, err});
    env.add(id, at_most(label(id, fmt::format("relative_error[dt={}]", dt)), factor * env["c4.error"], err));
    if (dt == 1e-3) {
      if (!env.dir.empty()) write_trajectory(env.dir / "trajectory.csv", tr);
    }
  }
  env.csv("errors.csv", errs);
  env.add(id, near(label(id, "time_order"), 1.0, factor * env["c4.order_tol"],
                   order_between(errs.rows[0][1], errs.rows[1][1], 2e-3, 1e-3)));
}

RescaledOptions every(int store_every) {
  RescaledOptions ro;
  ro.store_every = store_every;
  return ro;
}

void bump_study(Env& env) {
  const StationaryProfile prof = profile_on(GridKind::interval, 1, 400, 0.5);
  const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4, 1e-9);
  const Field u0 = detail::bump(prof.grid, 0.5, 0.1, 1.0);
  const LongRun run = evolve_long(prof.grid, 2.0, u0, 1.0, Schedule::geometric(1e-3, 1.05), 16.0,
                                  2e-3, every(5));
  const AsymptoticsReport rep = analyze_asymptotics(run.rescaled, prof, sys);
  env.csv("asymptotics.csv", detail::asymptotics_table(rep));

  env.add(5, near(label(5, "deviation_slope"), -1.0, env["c5.slope_tol"], rep.fit_deviation.slope));
  env.add(6, near(label(6, "gamma"), 1.0, 0.0, rep.gamma));
  env.add(6, near(label(6, "remainder_slope"), -2.0, env["c6.remainder_tol"], rep.fit_remainder.slope));
  env.add(6, at_most(label(6, "N_sup_ratio_slope"), env["c6.N_slope"], rep.fit_N.slope));

  const double lo = std::exp(2.0), hi = std::exp(10.0);
  const DecayFit d1 = time_derivative_decay(run.rescaled, 1, lo, hi);
  const DecayFit d2 = time_derivative_decay(run.rescaled, 2, lo, hi);
  env.add(9, near(label(9, "slope_l1"), -3.0, env["c9.l1_tol"], d1.slope));
  env.add(9, near(label(9, "slope_l2"), -4.0, env["c9.l2_tol"], d2.slope));
}

void shift_study(Env& env, int id, GridKind kind, int dim, double rel) {
  const StationaryProfile prof = profile_on(kind, dim, 400, 0.5);
  const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4, 1e-9);
  for (double s0 : {0.05, 0.1}) {
    const Field u0 = detail::separable_solution(prof, s0, 0.0);
    const LongRun run = evolve_long(prof.grid, 2.0, u0, 0.1, Schedule::fixed(1e-4, 1000), 16.0,
                                    2e-3, every(5));
    const AsymptoticsReport rep = analyze_asymptotics(run.rescaled, prof, sys);
    env.csv(fmt::format("asymptotics_s{}.csv", s0), detail::asymptotics_table(rep));
    env.add(id, near(label(id, fmt::format("tau_star[s0={}]", s0)), s0, rel * s0, rep.tau_star));
  }
}

void boundary_study(Env& env) {
  const StationaryProfile prof = profile_on(GridKind::interval, 1, 1600, 0.5);
  env.csv("profile.csv", detail::profile_table(prof));
  const ExpansionFit fit = fit_boundary_expansion(prof.theta, prof.grid);
  const double coef = 4.0 / 15.0;
  env.add(8, near(label(8, "exponent_q"), 2.5, env["c8.q_rel"] * 2.5, fit.q));
  env.add(8, near(label(8, "coefficient_b_over_sqrt_a"), coef, env["c8.coef_rel"] * coef,
                  std::abs(fit.b) / std::sqrt(fit.a)));
  env.add(8, near(label(8, "third_derivative_slope"), -0.5, env["c8.d3_tol"],
                  third_derivative_blowup(prof.theta, prof.grid).slope));

  const double alpha = 0.5;
  Table holder{{"N", "proxy_alpha", "proxy_alpha_plus"}, {}};
  for (std::size_t n : {400, 800, 1600, 3200}) {
    const StationaryProfile pr = profile_on(GridKind::interval, 1, n, 0.5);
    holder.rows.push_back({double(n), holder_proxy(pr.theta, pr.grid, alpha),
                           holder_proxy(pr.theta, pr.grid, alpha + 0.2)});
  }
  env.csv("holder.csv", holder);
  const auto& r = holder.rows;
  double min_growth = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < r.size(); ++k) min_growth = std::min(min_growth, r[k][2] / r[k - 1][2]);
  env.add(8, at_most(label(8, "holder_1_over_m_growth"), env["c8.holder_bounded"],
                     r.back()[1] / r[r.size() - 2][1]));
  env.add(8, at_least(label(8, "holder_excess_growth"), env["c8.holder_growth"], min_growth));
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

Field random_bumps(const Grid& g, std::mt19937_64& rng, int count) {
  Field u(g.n(), 0.0);
  for (int b = 0; b < count; ++b) {
    const double c = 0.15 + 0.7 * unit(rng), w = 0.04 + 0.1 * unit(rng), a = 0.2 + 0.8 * unit(rng);
    const Field one = detail::bump(g, c, w, a);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += one[i];
  }
  return u;
}

void invariants_study(Env& env) {
  constexpr double ms[] = {1.5, 2.0, 2.5, 3.0};
  const Grid g = build_grid(GridKind::interval, 1, 1.0, 200);
  const double slack = discretisation_slack(g);
  Table t{{"seed", "m", "handoff", "min_u", "giant_violation", "order_violation", "c_1", "A_1",
           "tau_star", "gram_defect", "sturm_mismatch"},
          {}};
  double min_u = std::numeric_limits<double>::infinity(), giant = -min_u, order = 0.0;
  double c1_max = -min_u, a1_min = min_u, ts_min = min_u, gram = 0.0, sturm = 0.0, unordered = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::uint64_t seed = env.seed + std::uint64_t(k);
    std::mt19937_64 rng(seed);
    const double m = ms[rng() % 4];
    const int count = 1 + int(rng() % 3);
    const StationaryProfile prof = solve_theta(g, 1.0 / m, 1e-10);
    const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4, 1e-9);
    const Field a = random_bumps(g, rng, count);
    Field b = random_bumps(g, rng, 1);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += a[i];

    const auto th = detect_positivity_time(evolve_pme(g, m, a, 100.0, Schedule::geometric(1e-3, 1.05)));
    if (!th) throw PositivityLoss(fmt::format("seed {}: no positivity by t = 100", seed));
    const Schedule sch = Schedule::geometric(1e-4, 1.01);
    const LongRun ra = evolve_long(g, m, a, *th, sch, 16.0, 1e-2, every(5));
    const Trajectory rb = evolve_pme(g, m, b, *th, sch);
    const OrderingReport ord = compare_ordering(ra.early, rb, slack);

    double mu = std::numeric_limits<double>::infinity(), gv = -mu;
    for (const Trajectory* tr : {&ra.early, &rb})
      for (const Field& f : tr->fields)
        for (double v : f) mu = std::min(mu, v);
    for (std::size_t s = 0; s < ra.early.size(); ++s) {
      if (!(ra.early.times[s] > 0.0)) continue;
      const Field U = friendly_giant(prof, ra.early.times[s]);
      for (std::size_t i = 0; i < U.size(); ++i) gv = std::max(gv, ra.early.fields[s][i] - U[i]);
    }
    for (std::size_t s = 0; s < ra.rescaled.size(); ++s) {
      const double scale = std::exp(-ra.rescaled.times[s] / (m - 1.0));
      for (std::size_t i = 0; i < g.n(); ++i)
        gv = std::max(gv, scale * (std::pow(ra.rescaled.fields[s][i], 1.0 / m) - prof.s_profile[i]));
    }
    const AsymptoticsReport rep = analyze_asymptotics(ra.rescaled, prof, sys);
    int mismatch = 0;
    for (int j = 0; j < 4; ++j) mismatch += sign_changes(sys.psis[std::size_t(j)]) != j;

    t.rows.push_back({double(seed), m, *th, mu, gv, ord.max_violation, rep.modes.c[0], rep.A1,
                      rep.tau_star, sys.gram_defect, double(mismatch)});
    min_u = std::min(min_u, mu);
    giant = std::max(giant, gv);
    order = std::max(order, ord.max_violation);
    unordered += ord.initially_ordered ? 0.0 : 1.0;
    c1_max = std::max(c1_max, rep.modes.c[0]);
    a1_min = std::min(a1_min, rep.A1);
    ts_min = std::min(ts_min, rep.tau_star);
    gram = std::max(gram, sys.gram_defect);
    sturm += mismatch;
  }
  env.csv("invariants.csv", t);
  env.add(10, at_least(label(10, "min_u"), 0.0, min_u));
  env.add(10, at_most(label(10, "u_minus_giant"), slack, giant));
  env.add(10, at_most(label(10, "unordered_pairs"), 0.0, unordered));
  env.add(10, at_most(label(10, "comparison_violation"), slack, order));
  env.add(10, at_most(label(10, "max_c_1"), 0.0, c1_max));
  env.add(10, at_least(label(10, "min_A_1"), 0.0, a1_min));
  env.add(10, at_least(label(10, "min_tau_star"), 0.0, ts_min));
  env.add(10, at_most(label(10, "gram_defect"), env["c10.gram"], gram));
  env.add(10, at_most(label(10, "sturm_mismatches"), 0.0, sturm));
}

void radial_study(Env& env) {
  const double factor = env["c11.factor"];
  const double rel = env["c11.consistency"];
  oracle_study(env, 11, GridKind::radial, 3, factor);
  for (double p : kPs) {
    const StationaryProfile prof = profile_on(GridKind::radial, 3, 800, p);
    const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4, 1e-9);
    first_pair_checks(env, 11, prof, sys, factor);
  }
  separable_study(env, 11, GridKind::radial, 3, factor);

  const StationaryProfile prof = profile_on(GridKind::radial, 3, 400, 0.5);
  const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4, 1e-9);
  const SpectralGap gap = spectral_gap_gamma(sys);
  const Field u0 = detail::bump(prof.grid, 0.0, 0.3, 1.0);
  const LongRun run = evolve_long(prof.grid, 2.0, u0, 4.0, Schedule::geometric(1e-3, 1.05), 16.0,
                                  2e-3, every(5));
  const AsymptoticsReport rep = analyze_asymptotics(run.rescaled, prof, sys);
  env.csv("asymptotics_bump.csv", detail::asymptotics_table(rep));
  env.add(11, near(label(11, "deviation_slope"), -1.0, rel, rep.fit_deviation.slope));
  env.add(11, near(label(11, "remainder_slope"), -(1.0 + gap.gamma), rel * (1.0 + gap.gamma),
                   rep.fit_remainder.slope));
  shift_study(env, 11, GridKind::radial, 3, rel);
}

struct Job {
  std::string dir;
  std::vector<int> ids;
  std::function<void(Env&)> body;
};

std::vector<Job> all_jobs() {
  return {
      {"stationary_oracle", {1}, [](Env& e) { oracle_study(e, 1, GridKind::interval, 1, 1.0); }},
      {"eigenpairs", {2, 3}, eigen_study},
      {"separable_solution", {4}, [](Env& e) { separable_study(e, 4, GridKind::interval, 1, 1.0); }},
      {"bump_long_run", {5, 6, 9}, bump_study},
      {"shift_recovery", {7}, [](Env& e) { shift_study(e, 7, GridKind::interval, 1, e["c7.rel"]); }},
      {"boundary_exponent", {8}, boundary_study},
      {"structural_invariants", {10}, invariants_study},
      {"radial_smoke", {11}, radial_study},
  };
}

bool selected(const std::string& filter, int id) {
  if (filter.empty() || filter == std::to_string(id)) return true;
  return criterion_names()[std::size_t(id - 1)].find(filter) != std::string::npos;
}

}  // namespace

BatteryReport battery(const BatteryOptions& opts) {
  BatteryTolerances tol = default_battery_tolerances();
  for (const auto& [key, value] : opts.overrides) {
    if (!tol.count(key)) throw ConfigInvalid(fmt::format("unknown battery tolerance '{}'", key));
    tol[key] = value;
  }

  std::vector<Job> jobs;
  for (Job& job : all_jobs()) {
    std::vector<int> keep;
    for (int id : job.ids)
      if (selected(opts.filter, id)) keep.push_back(id);
    if (keep.empty()) continue;
    job.ids = std::move(keep);
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw ConfigInvalid(fmt::format("no criterion matches '{}'", opts.filter));

  std::vector<std::vector<CriterionResult>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      Checks checks;
      Env env{tol, opts.out_dir.empty() ? fs::path() : opts.out_dir / job.dir, opts.seed, checks};
      std::string error;
      const auto start = std::chrono::steady_clock::now();
      try {
        job.body(env);
      } catch (const std::exception& e) {
        error = e.what();
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (int id : job.ids) {
        CriterionResult r;
        r.id = id;
        r.name = criterion_names()[std::size_t(id - 1)];
        r.checks = std::move(checks[id]);
        r.error = error;
        r.seconds = secs;
        results[j].push_back(std::move(r));
      }
    }
  };
  const unsigned n = worker_count(opts.threads, jobs.size());
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  BatteryReport report;
  for (auto& group : results)
    for (auto& r : group) report.criteria.push_back(std::move(r));
  std::sort(report.criteria.begin(), report.criteria.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  if (!opts.out_dir.empty()) {
    std::vector<Check> all;
    for (const auto& c : report.criteria) all.insert(all.end(), c.checks.begin(), c.checks.end());
    write_report(opts.out_dir / "report.csv", all);
  }
  return report;
}

std::string format_battery(const BatteryReport& report) {
  std::string out;
  for (const CriterionResult& c : report.criteria) {
    const auto passed = std::count_if(c.checks.begin(), c.checks.end(), [](const Check& k) { return k.pass(); });
    out += fmt::format("[{}] {:>2} {} ({}/{} checks, {:.1f} s)\n", c.pass() ? "PASS" : "FAIL", c.id,
                       c.name, passed, c.checks.size(), c.seconds);
    if (!c.error.empty()) out += fmt::format("       error: {}\n", c.error);
    for (const Check& k : c.checks) {
      if (k.pass()) continue;
      const char* rel = k.relation == Relation::near ? "=" : k.relation == Relation::at_most ? "<=" : ">=";
      out += fmt::format("       failed {}: measured {:.6g}, want {} {:.6g}", k.criterion, k.measured,
                         rel, k.target);
      if (k.relation == Relation::near) out += fmt::format(" ± {:.3g}", k.tolerance);
      out += '\n';
    }
  }
  return out;
}

}  // namespace pme::lab
