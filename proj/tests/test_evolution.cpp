#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "pme/error.hpp"
#include "pme/evolution.hpp"
#include "support.hpp"

using namespace pme;

namespace {

double mass(const Grid& g, const Field& u) {
  const Laplacian lap = build_laplacian(g);
  return std::inner_product(u.begin(), u.end(), lap.volume.begin(), 0.0);
}

double relative_error(const Field& a, const Field& b) {
  return test::sup_diff(a, b) / *std::max_element(b.begin(), b.end());
}

}  // namespace

TEST_SUITE("evolution") {

TEST_CASE("separable solution is reproduced") {
  const double m = 2.0, s = 1.0;
  const StationaryProfile prof = solve_theta(build_grid(GridKind::interval, 1, 1.0, 199), 1.0 / m, 1e-10);
  const Field u0 = friendly_giant(prof, s);
  double prev = 0.0;
  for (double dt : {2e-3, 1e-3}) {
    const Trajectory tr = evolve_pme(prof.grid, m, u0, 1.0, Schedule::fixed(dt, 100));
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == doctest::Approx(1.0));
    double err = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k)
      err = std::max(err, relative_error(tr.fields[k], friendly_giant(prof, s + tr.times[k])));
    CHECK(err < 1e-3);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("random data stays nonnegative and loses mass monotonically") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const double m = test::uniform(rng, 1.5, 3.0);
    const Grid g = build_grid(GridKind::interval, 1, 1.0, 100 + rng() % 100);
    const Field u0 = test::random_bumps(g, rng, 1 + int(rng() % 3));
    const Trajectory tr = evolve_pme(g, m, u0, 0.5, Schedule::geometric(1e-4, 1.05));
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(*std::min_element(tr.fields[k].begin(), tr.fields[k].end()) >= 0.0);
      if (k > 0) CHECK(mass(g, tr.fields[k]) <= mass(g, tr.fields[k - 1]) * (1 + 1e-12));
    }
  }
}

TEST_CASE("comparison principle on ordered random data") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 4; ++trial) {
    const double m = test::uniform(rng, 1.5, 3.0);
    const Grid g = build_grid(GridKind::interval, 1, 1.0, 160);
    const Field lower = test::random_bumps(g, rng, 2);
    Field upper = test::random_bumps(g, rng, 2);
    for (std::size_t i = 0; i < g.n(); ++i) upper[i] += lower[i];
    const Schedule sch = Schedule::geometric(1e-4, 1.05, 5);
    const Trajectory a = evolve_pme(g, m, lower, 1.0, sch);
    const Trajectory b = evolve_pme(g, m, upper, 1.0, sch);
    const OrderingReport rep = compare_ordering(a, b, discretisation_slack(g));
    CHECK(rep.initially_ordered);
    CHECK(rep.ordered);
    const OrderingReport rev = compare_ordering(b, a, discretisation_slack(g));
    CHECK_FALSE(rev.initially_ordered);
  }
}

TEST_CASE("incompatible trajectories") {
  const Grid g = build_grid(GridKind::interval, 1, 1.0, 40);
  const Grid h = build_grid(GridKind::interval, 1, 1.0, 41);
  std::mt19937_64 rng(1);
  const Trajectory a = evolve_pme(g, 2.0, test::random_bumps(g, rng, 1), 0.1, Schedule::fixed(1e-2));
  const Trajectory b = evolve_pme(h, 2.0, test::random_bumps(h, rng, 1), 0.1, Schedule::fixed(1e-2));
  const Trajectory c = evolve_pme(g, 3.0, a.fields[0], 0.1, Schedule::fixed(1e-2));
  const Trajectory d = evolve_pme(g, 2.0, a.fields[0], 0.1, Schedule::fixed(2e-2));
  CHECK_THROWS_AS(compare_ordering(a, b, 0.0), IncompatibleTrajectories);
  CHECK_THROWS_AS(compare_ordering(a, c, 0.0), IncompatibleTrajectories);
  CHECK_THROWS_AS(compare_ordering(a, d, 0.0), IncompatibleTrajectories);
}

TEST_CASE("input validation") {
  const Grid g = build_grid(GridKind::interval, 1, 1.0, 40);
  const Field ok(g.n(), 0.1);
  Field neg = ok;
  neg[3] = -1e-3;
  CHECK_THROWS_AS(evolve_pme(g, 2.0, Field(g.n() - 1, 0.1), 1.0, Schedule::fixed(0.1)), InvalidArgument);
  CHECK_THROWS_AS(evolve_pme(g, 2.0, neg, 1.0, Schedule::fixed(0.1)), InvalidArgument);
  CHECK_THROWS_AS(evolve_pme(g, 2.0, Field(g.n(), 0.0), 1.0, Schedule::fixed(0.1)), InvalidArgument);
  CHECK_THROWS_AS(evolve_pme(g, 1.0, ok, 1.0, Schedule::fixed(0.1)), InvalidArgument);
  CHECK_THROWS_AS(evolve_pme(g, 2.0, ok, 0.0, Schedule::fixed(0.1)), InvalidArgument);
  CHECK_THROWS_AS(evolve_pme(g, 2.0, ok, 1.0, Schedule::fixed(0.0)), InvalidArgument);
  CHECK_THROWS_AS(evolve_pme(g, 2.0, ok, 1.0, Schedule::geometric(1e-3, 1.5)), InvalidArgument);
  CHECK_THROWS_AS(evolve_rescaled(g, 0.5, neg, 0.0, 1.0, 1e-2), InvalidArgument);
  CHECK_THROWS_AS(evolve_rescaled(g, 1.5, ok, 0.0, 1.0, 1e-2), InvalidArgument);
  CHECK_THROWS_AS(evolve_rescaled(g, 0.5, ok, 1.0, 0.0, 1e-2), InvalidArgument);
}

TEST_CASE("stationary profile is a fixed point of the rescaled flow") {
  for (double p : {0.3, 0.5, 0.7}) {
    const StationaryProfile prof = solve_theta(build_grid(GridKind::interval, 1, 1.0, 99), p, 1e-10);
    const Trajectory tr = evolve_rescaled(prof.grid, p, prof.theta, 0.0, 1.0, 0.05);
    const double scale = *std::max_element(prof.theta.begin(), prof.theta.end());
    CHECK(test::sup_diff(tr.fields.back(), prof.theta) < 1e-9 * scale);
  }
}

TEST_CASE("rescaled schemes converge at their design order") {
  // θ = g(τ) Θ with (g^p)' = k (g^p - g) is an exact solution of the semi-discrete flow;
  // from the separable u-solution, g = (1 + s e^{-τ})^{-m/(m-1)}.
  const double m = 2.0, p = 0.5, s = 1.0;
  const StationaryProfile prof = solve_theta(build_grid(GridKind::interval, 1, 1.0, 63), p, 1e-10);
  auto exact = [&](double tau) {
    Field th(prof.theta);
    const double g = std::pow(1.0 + s * std::exp(-tau), -m / (m - 1.0));
    for (double& v : th) v *= g;
    return th;
  };
  for (TimeScheme scheme : {TimeScheme::backward_euler, TimeScheme::bdf2}) {
    RescaledOptions opts;
    opts.scheme = scheme;
    std::vector<double> errs;
    for (double dtau : {0.04, 0.02, 0.01}) {
      const Trajectory tr = evolve_rescaled(prof.grid, p, exact(0.0), 0.0, 2.0, dtau, opts);
      errs.push_back(test::sup_diff(tr.fields.back(), exact(tr.times.back())));
    }
    const double order = std::log2(errs[1] / errs[2]);
    CHECK(order == doctest::Approx(scheme == TimeScheme::bdf2 ? 2.0 : 1.0).epsilon(0.1));
  }
}

TEST_CASE("positivity detection and slicing") {
  const Grid g = build_grid(GridKind::interval, 1, 1.0, 200);
  Field bump(g.n(), 0.0);
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double s = (g.nodes[i] - 0.5) / 0.1;
    if (std::abs(s) < 1) bump[i] = (1 - s * s) * (1 - s * s);
  }
  const Trajectory tr = evolve_pme(g, 2.0, bump, 2.0, Schedule::geometric(1e-3, 1.05));
  const auto tp = detect_positivity_time(tr);
  REQUIRE(tp.has_value());
  CHECK(*tp > 0.0);
  CHECK(*tp < 2.0);
  CHECK_FALSE(detect_positivity_time(slice(tr, 0.0, 0.5 * *tp)).has_value());

  const Trajectory mid = slice(tr, 0.5, 1.0);
  CHECK(mid.times.front() >= 0.5);
  CHECK(mid.times.back() <= 1.0);
  CHECK(mid.fields.size() == mid.times.size());

  CHECK_THROWS_AS(evolve_long(g, 2.0, bump, 0.01, Schedule::fixed(1e-3), 1.0, 1e-2), PositivityLoss);
  const LongRun lr = evolve_long(g, 2.0, bump, 2.0, Schedule::geometric(1e-3, 1.05), 1.5, 1e-2);
  CHECK(lr.rescaled.times.front() == doctest::Approx(std::log(2.0)));
  CHECK(lr.rescaled.variable == Variable::theta);
  const double scale = std::pow(2.0, 2.0);
  CHECK(lr.rescaled.fields.front()[100] == doctest::Approx(scale * std::pow(lr.early.fields.back()[100], 2.0)));
}

}  // TEST_SUITE
