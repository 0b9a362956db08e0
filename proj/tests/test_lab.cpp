#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>

#include "pme/error.hpp"
#include "pme/lab/battery.hpp"
#include "pme/lab/config.hpp"
#include "pme/lab/report.hpp"
#include "pme/lab/run.hpp"
#include "support.hpp"

using namespace pme;
using namespace pme::lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pme_lab_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

double summary(const RunRecord& rec, const std::string& key) {
  for (const auto& [k, v] : rec.summary)
    if (k == key) return v;
  FAIL("missing summary key " << key);
  return 0.0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("config parsing and canonical form") {
  const ExperimentConfig cfg = parse(R"(
; comment
m = 3
N = 200
experiments = stationary, spectrum
output_dir = out/x
[domain]
kind = ball
radius = 2
[tolerances]
mu = 1e-6
)");
  CHECK(cfg.m == 3.0);
  CHECK(cfg.N == 200);
  CHECK(cfg.domain.kind == GridKind::radial);
  CHECK(cfg.domain.dim == 3);
  CHECK(cfg.domain.size == 2.0);
  CHECK(cfg.tol.mu == 1e-6);
  CHECK(cfg.wants(Experiment::spectrum));
  CHECK_FALSE(cfg.wants(Experiment::evolve));

  const std::string text = serialize(cfg);
  const ExperimentConfig again = parse(text);
  CHECK(serialize(again) == text);
  CHECK(config_hash(again) == config_hash(cfg));

  ExperimentConfig other = cfg;
  other.tol.mu = 2e-6;
  CHECK(config_hash(other) != config_hash(cfg));

  // Key order inside sections does not matter.
  const ExperimentConfig a = parse("experiments = stationary\n[domain]\ndim = 2\nkind = ball\n");
  const ExperimentConfig b = parse("experiments = stationary\n[domain]\nkind = ball\ndim = 2\n");
  CHECK(a.domain.dim == 2);
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("invalid configs") {
  const char* bad[] = {
      "m = 2\n",                                          // no experiments
      "experiments = stationary\nbogus = 1\n",            // unknown key
      "experiments = stationary\n[nowhere]\nx = 1\n",     // unknown section
      "experiments = stationary\nm = 0.5\n",              // m <= 1
      "experiments = stationary\nN = 4\n",                // too few nodes
      "experiments = stationary\nm = two\n",              // not a number
      "experiments = dance\n",                            // unknown experiment
      "experiments = stationary\n[domain]\nkind = torus\n",
      "experiments = stationary\n[domain]\nlength = -1\n",
      "experiments = evolve\n[schedule]\nkind = geometric\nrho = 3\n",
      "experiments = stationary\n[initial]\nkind = file\n",  // missing path
      "experiments = stationary\n[domain]\nkind = interval\ndim = 2\n",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse(text), ConfigInvalid);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/pme.ini"), ConfigInvalid);
}

TEST_CASE("checks") {
  CHECK(near("x", 1.0, 0.1, 1.05).pass());
  CHECK_FALSE(near("x", 1.0, 0.1, 1.2).pass());
  CHECK(at_most("x", 1.0, 1.0).pass());
  CHECK_FALSE(at_most("x", 1.0, 1.1).pass());
  CHECK(at_least("x", 1.0, 2.0).pass());
  CHECK_FALSE(at_most("x", 1.0, std::nan("")).pass());
  CHECK_FALSE(at_least("x", 1.0, std::numeric_limits<double>::infinity()).pass());
}

TEST_CASE("csv and trajectory round trip") {
  const fs::path dir = scratch("csv");
  Table t{{"a", "b"}, {{0.1, 1.0 / 3.0}, {-2.5e-300, 7.0}}};
  write_csv(dir / "t.csv", t);
  const Table back = read_csv(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(format_number(0.1) == "0.1");

  write_report(dir / "report.csv", {near("c/one", 1.0, 0.1, 1.0), at_most("c/two", 2.0, 3.0)});
  const std::string rep = slurp(dir / "report.csv");
  CHECK(rep.rfind("criterion,target,measured,tolerance,pass\n", 0) == 0);
  CHECK(rep.find("c/two,<=2,3") != std::string::npos);

  const Grid g = build_grid(GridKind::interval, 1, 1.0, 12);
  std::mt19937_64 rng(2);
  Trajectory tr;
  tr.grid = g;
  tr.variable = Variable::u;
  tr.exponent = 2.0;
  for (double s : {0.0, 0.25, 1.0 / 3.0}) {
    tr.times.push_back(s);
    tr.fields.push_back(test::random_bumps(g, rng, 2));
  }
  write_trajectory(dir / "traj.csv", tr);
  const std::string head = slurp(dir / "traj.csv").substr(0, 17);
  CHECK(head == "stamp,node,value\n");
  const Trajectory rt = read_trajectory(dir / "traj.csv", g, Variable::u, 2.0);
  CHECK(rt.times == tr.times);
  CHECK(rt.fields == tr.fields);
  const Grid other = build_grid(GridKind::interval, 1, 1.0, 13);
  CHECK_THROWS_AS(read_trajectory(dir / "traj.csv", other, Variable::u, 2.0), Error);
}

TEST_CASE("stationary and spectrum run") {
  ExperimentConfig cfg = parse("m = 2\nN = 400\nexperiments = stationary, spectrum\n");
  cfg.output_dir = scratch("spectrum");
  const RunRecord rec = run(cfg);
  CHECK_FALSE(rec.failed);
  CHECK(rec.exit_code() == 0);
  for (const char* f : {"profile.csv", "spectrum.csv", "report.csv", "run.json"})
    CHECK(fs::exists(cfg.output_dir / f));
  CHECK(summary(rec, "gamma") == doctest::Approx(1.0).epsilon(1e-3));
  const Table table = read_csv(cfg.output_dir / "spectrum.csv");
  REQUIRE(table.rows.size() >= 2);
  CHECK(table.header[0] == "j");
  CHECK(table.header[1] == "mu_j");
  CHECK(table.header.size() == 2 + 400);
  CHECK(table.rows[0][1] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(table.rows[1][1] == doctest::Approx(3.0).epsilon(1e-3));
  const Table prof = read_csv(cfg.output_dir / "profile.csv");
  CHECK(prof.header == std::vector<std::string>{"x", "theta", "S", "d"});
  CHECK(slurp(cfg.output_dir / "run.json").find(kRunFormat) != std::string::npos);
}

TEST_CASE("separable evolve run and resume") {
  ExperimentConfig cfg = parse(R"(
m = 2
N = 200
experiments = evolve
[schedule]
dt = 1e-3
t_end = 1
store_every = 100
)");
  cfg.output_dir = scratch("separable");
  const RunRecord rec = run(cfg);
  CHECK(rec.exit_code() == 0);
  CHECK(summary(rec, "separable_error") < 1e-3);
  CHECK(rec.steps.steps == 1000);
  const Table traj = read_csv(cfg.output_dir / "trajectory.csv");
  CHECK(traj.header == std::vector<std::string>{"stamp", "node", "value"});
  CHECK(traj.rows.size() == 11 * 200);

  ExperimentConfig again = cfg;
  CHECK(config_hash(again) == rec.config_hash);

  ExperimentConfig bad = cfg;
  bad.experiments = {Experiment::regularity};
  bad.resume_from = cfg.output_dir / "missing";
  bad.output_dir = scratch("resume_bad");
  CHECK_THROWS_AS(run(bad), ConfigInvalid);
}

TEST_CASE("module failure marks the run") {
  ExperimentConfig cfg = parse(R"(
m = 2
N = 200
experiments = asymptotics
[initial]
kind = bump
width = 0.1
[schedule]
kind = geometric
dt = 1e-4
[asymptotics]
t_handoff = 0.001
)");
  cfg.output_dir = scratch("failing");
  const RunRecord rec = run(cfg);
  CHECK(rec.failed);
  CHECK(rec.exit_code() == 3);
  CHECK(fs::exists(cfg.output_dir / "FAILED"));
  CHECK(fs::exists(cfg.output_dir / "report.csv"));

  // A later successful run in the same directory clears the marker.
  cfg.experiments = {Experiment::stationary};
  CHECK(run(cfg).exit_code() == 0);
  CHECK_FALSE(fs::exists(cfg.output_dir / "FAILED"));
}

TEST_CASE("empty experiment list is rejected") {
  ExperimentConfig cfg;
  cfg.output_dir = scratch("empty");
  CHECK_THROWS_AS(run(cfg), ConfigInvalid);
}

TEST_CASE("battery filters, determinism and overrides") {
  CHECK(criterion_names().size() == 11);
  BatteryOptions opts;
  opts.filter = "first_eigenpair";
  opts.out_dir = scratch("battery_a");
  const BatteryReport a = battery(opts);
  REQUIRE(a.criteria.size() == 1);
  CHECK(a.criteria[0].id == 2);
  CHECK(a.pass());

  BatteryOptions again = opts;
  again.out_dir = scratch("battery_b");
  again.threads = 1;
  battery(again);
  CHECK(slurp(opts.out_dir / "report.csv") == slurp(again.out_dir / "report.csv"));

  // A tightened tolerance fails exactly the affected criterion.
  BatteryOptions tight;
  tight.filter = "2";
  tight.overrides["c2.mu1"] = 1e-12;
  const BatteryReport t = battery(tight);
  REQUIRE(t.criteria.size() == 1);
  CHECK_FALSE(t.pass());
  int failing = 0;
  for (const Check& c : t.criteria[0].checks) failing += !c.pass();
  CHECK(failing >= 1);
  CHECK(format_battery(t).find("[FAIL]  2 first_eigenpair") != std::string::npos);
  tight.filter = "second_eigenvalue";
  CHECK(battery(tight).pass());

  BatteryOptions unknown;
  unknown.filter = "2";
  unknown.overrides["c2.nonsense"] = 1.0;
  CHECK_THROWS_AS(battery(unknown), ConfigInvalid);

  BatteryOptions none;
  none.filter = "no-such-criterion";
  CHECK_THROWS_AS(battery(none), ConfigInvalid);
}

TEST_CASE("worker count honours the environment cap") {
  ::setenv("PME_LAB_THREADS", "2", 1);
  CHECK(worker_count(8, 10) == 2);
  CHECK(worker_count(1, 10) == 1);
  CHECK(worker_count(8, 1) == 1);
  ::setenv("PME_LAB_THREADS", "junk", 1);
  CHECK(worker_count(3, 10) == 3);
  ::unsetenv("PME_LAB_THREADS");
  CHECK(worker_count(3, 10) == 3);
  CHECK(worker_count(0, 10) >= 1);
}

}  // TEST_SUITE
