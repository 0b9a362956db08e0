#include "pme/lab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "pme/error.hpp"
#include "pme/lab/report.hpp"

namespace pme::lab {

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::stationary: return "stationary";
    case Experiment::spectrum: return "spectrum";
    case Experiment::evolve: return "evolve";
    case Experiment::asymptotics: return "asymptotics";
    case Experiment::regularity: return "regularity";
  }
  return "?";
}

bool ExperimentConfig::wants(Experiment e) const {
  return std::find(experiments.begin(), experiments.end(), e) != experiments.end();
}

namespace {

constexpr Experiment kAllExperiments[] = {Experiment::stationary, Experiment::spectrum,
                                          Experiment::evolve, Experiment::asymptotics,
                                          Experiment::regularity};

using Setter = std::function<void(const std::string&)>;
using Section = std::map<std::string, Setter>;

std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

double to_double(const std::string& key, const std::string& s) {
  double v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigInvalid(fmt::format("{}: '{}' is not a finite number", key, s));
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& s) {
  std::uint64_t v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigInvalid(fmt::format("{}: '{}' is not a non-negative integer", key, s));
  return v;
}

Setter real(const std::string& key, double& dst) {
  return [key, &dst](const std::string& s) { dst = to_double(key, s); };
}

template <class Int>
Setter integer(const std::string& key, Int& dst) {
  return [key, &dst](const std::string& s) { dst = static_cast<Int>(to_unsigned(key, s)); };
}

std::vector<Experiment> parse_experiments(const std::string& s) {
  std::vector<Experiment> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    boost::algorithm::trim(item);
    if (item.empty()) continue;
    const auto* it = std::find_if(std::begin(kAllExperiments), std::end(kAllExperiments),
                                  [&](Experiment e) { return item == to_string(e); });
    if (it == std::end(kAllExperiments))
      throw ConfigInvalid(fmt::format("experiments: unknown experiment '{}'", item));
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
  }
  return out;
}

std::map<std::string, Section> setters(ExperimentConfig& c) {
  std::map<std::string, Section> t;
  t[""] = {
      {"m", real("m", c.m)},
      {"N", integer("N", c.N)},
      {"seed", integer("seed", c.seed)},
      {"experiments", [&c](const std::string& s) { c.experiments = parse_experiments(s); }},
      {"output_dir", [&c](const std::string& s) { c.output_dir = s; }},
      {"resume_from", [&c](const std::string& s) { c.resume_from = s; }},
  };
  t["domain"] = {
      {"kind",
       [&c](const std::string& s) {
         if (s == "interval") {
           c.domain.kind = GridKind::interval;
         } else if (s == "ball") {
           c.domain.kind = GridKind::radial;
         } else {
           throw ConfigInvalid(fmt::format("domain.kind: expected interval or ball, got '{}'", s));
         }
       }},
      {"length", real("domain.length", c.domain.size)},
      {"radius", real("domain.radius", c.domain.size)},
      {"dim", integer("domain.dim", c.domain.dim)},
  };
  t["initial"] = {
      {"kind",
       [&c](const std::string& s) {
         using K = InitialConfig::Kind;
         static const std::map<std::string, K> kinds = {
             {"separable", K::separable}, {"bump", K::bump}, {"profile", K::profile}, {"file", K::file}};
         const auto it = kinds.find(s);
         if (it == kinds.end()) throw ConfigInvalid(fmt::format("initial.kind: unknown kind '{}'", s));
         c.initial.kind = it->second;
       }},
      {"s", real("initial.s", c.initial.s)},
      {"center", real("initial.center", c.initial.center)},
      {"width", real("initial.width", c.initial.width)},
      {"height", real("initial.height", c.initial.height)},
      {"c", real("initial.c", c.initial.c)},
      {"path", [&c](const std::string& s) { c.initial.path = s; }},
  };
  t["schedule"] = {
      {"kind",
       [&c](const std::string& s) {
         if (s == "fixed")
           c.schedule.kind = Schedule::Kind::fixed;
         else if (s == "geometric")
           c.schedule.kind = Schedule::Kind::geometric;
         else
           throw ConfigInvalid(fmt::format("schedule.kind: expected fixed or geometric, got '{}'", s));
       }},
      {"dt", real("schedule.dt", c.schedule.dt)},
      {"rho", real("schedule.rho", c.schedule.rho)},
      {"t_end", real("schedule.t_end", c.schedule.t_end)},
      {"store_every", integer("schedule.store_every", c.schedule.store_every)},
  };
  auto& tol = c.tol;
  t["tolerances"] = {
      {"stationary", real("tolerances.stationary", tol.stationary)},
      {"eigen", real("tolerances.eigen", tol.eigen)},
      {"step", real("tolerances.step", tol.step)},
      {"oracle", real("tolerances.oracle", tol.oracle)},
      {"mu", real("tolerances.mu", tol.mu)},
      {"mu2_rel", real("tolerances.mu2_rel", tol.mu2_rel)},
      {"separable", real("tolerances.separable", tol.separable)},
      {"rate", real("tolerances.rate", tol.rate)},
      {"shift", real("tolerances.shift", tol.shift)},
      {"exponent", real("tolerances.exponent", tol.exponent)},
  };
  auto& a = c.asymptotics;
  t["asymptotics"] = {
      {"t_handoff", real("asymptotics.t_handoff", a.t_handoff)},
      {"tau_end", real("asymptotics.tau_end", a.tau_end)},
      {"dtau", real("asymptotics.dtau", a.dtau)},
      {"store_every", integer("asymptotics.store_every", a.store_every)},
      {"K", integer("asymptotics.K", a.K)},
      {"fit_lo", real("asymptotics.fit_lo", a.fit_lo)},
      {"fit_hi", real("asymptotics.fit_hi", a.fit_hi)},
      {"tail_lo", real("asymptotics.tail_lo", a.tail_lo)},
      {"tail_hi", real("asymptotics.tail_hi", a.tail_hi)},
  };
  return t;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigInvalid(msg);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.m > 1.0, fmt::format("m must exceed 1 (got {})", c.m));
  require(c.N >= 8, fmt::format("N must be at least 8 (got {})", c.N));
  require(c.domain.size > 0.0, "domain size must be positive");
  require(c.domain.dim >= 1 && c.domain.dim <= 10, "domain.dim must lie in 1..10");
  require(c.domain.kind == GridKind::radial || c.domain.dim == 1, "intervals are one-dimensional");
  require(!c.experiments.empty(), "experiments list is empty");

  const auto& s = c.schedule;
  require(s.dt > 0.0, "schedule.dt must be positive");
  require(s.t_end > 0.0, "schedule.t_end must be positive");
  require(s.store_every >= 1, "schedule.store_every must be at least 1");
  if (s.kind == Schedule::Kind::geometric)
    require(s.rho > 1.0 && s.rho - 1.0 <= 0.2,
            fmt::format("schedule.rho must satisfy 0 < rho - 1 <= 0.2 (got {})", s.rho));

  const auto& i = c.initial;
  using K = InitialConfig::Kind;
  if (i.kind == K::separable) require(i.s > 0.0, "initial.s must be positive");
  if (i.kind == K::profile) require(i.c > 0.0, "initial.c must be positive");
  if (i.kind == K::bump) {
    require(i.width > 0.0 && i.height > 0.0, "bump width and height must be positive");
    require(i.center >= 0.0 && i.center <= c.domain.size, "bump centre lies outside the domain");
  }
  if (i.kind == K::file) require(!i.path.empty(), "initial.path is required for kind = file");

  const auto& a = c.asymptotics;
  require(a.t_handoff > 0.0, "asymptotics.t_handoff must be positive");
  require(a.dtau > 0.0, "asymptotics.dtau must be positive");
  require(a.store_every >= 1, "asymptotics.store_every must be at least 1");
  require(a.tau_end > std::log(a.t_handoff), "asymptotics.tau_end must follow the hand-off");
  require(a.K >= 2 && 4 * a.K <= c.N, "asymptotics.K must satisfy 2 <= K <= N/4");
  require(a.fit_hi - a.fit_lo >= 3.0, "asymptotics fit window must span at least 3");
  require(a.tail_hi > a.tail_lo, "asymptotics tail window is empty");

  const auto& t = c.tol;
  for (double v : {t.stationary, t.eigen, t.step, t.oracle, t.mu, t.mu2_rel, t.separable, t.rate,
                   t.shift, t.exponent})
    require(v > 0.0, "tolerances must be positive");
}

ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigInvalid(fmt::format("config line {}: {}", e.line(), e.message()));
  }

  ExperimentConfig cfg;
  cfg.experiments.clear();
  const auto table = setters(cfg);
  bool saw_dim = false;
  auto apply = [&](const std::string& section, const std::string& key, std::string value) {
    const auto& keys = table.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigInvalid(fmt::format("unknown key '{}'", where(section, key)));
    boost::algorithm::trim(value);
    it->second(value);
  };
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      apply("", key, node.data());
      continue;
    }
    if (!table.count(key) || key.empty()) throw ConfigInvalid(fmt::format("unknown section [{}]", key));
    for (const auto& [sub, leaf] : node) {
      if (!leaf.empty()) throw ConfigInvalid(fmt::format("[{}] nests deeper than one level", key));
      if (key == "domain" && sub == "dim") saw_dim = true;
      apply(key, sub, leaf.data());
    }
  }
  if (cfg.domain.kind == GridKind::radial && !saw_dim) cfg.domain.dim = 3;
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid(fmt::format("cannot open config {}", path.string()));
  return parse_config(in);
}

std::string serialize(const ExperimentConfig& c) {
  auto num = [](double v) { return format_number(v); };
  std::string exps;
  for (Experiment e : c.experiments) exps += (exps.empty() ? "" : ", ") + std::string(to_string(e));

  std::string out;
  auto line = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  line("m", num(c.m));
  line("N", std::to_string(c.N));
  line("seed", std::to_string(c.seed));
  line("experiments", exps);
  line("output_dir", c.output_dir.string());
  line("resume_from", c.resume_from.string());

  out += "\n[domain]\n";
  if (c.domain.kind == GridKind::interval) {
    line("kind", "interval");
    line("length", num(c.domain.size));
  } else {
    line("kind", "ball");
    line("dim", std::to_string(c.domain.dim));
    line("radius", num(c.domain.size));
  }

  out += "\n[initial]\n";
  static const char* kinds[] = {"separable", "bump", "profile", "file"};
  line("kind", kinds[static_cast<int>(c.initial.kind)]);
  line("s", num(c.initial.s));
  line("center", num(c.initial.center));
  line("width", num(c.initial.width));
  line("height", num(c.initial.height));
  line("c", num(c.initial.c));
  line("path", c.initial.path);

  out += "\n[schedule]\n";
  line("kind", c.schedule.kind == Schedule::Kind::fixed ? "fixed" : "geometric");
  line("dt", num(c.schedule.dt));
  line("rho", num(c.schedule.rho));
  line("t_end", num(c.schedule.t_end));
  line("store_every", std::to_string(c.schedule.store_every));

  out += "\n[tolerances]\n";
  line("stationary", num(c.tol.stationary));
  line("eigen", num(c.tol.eigen));
  line("step", num(c.tol.step));
  line("oracle", num(c.tol.oracle));
  line("mu", num(c.tol.mu));
  line("mu2_rel", num(c.tol.mu2_rel));
  line("separable", num(c.tol.separable));
  line("rate", num(c.tol.rate));
  line("shift", num(c.tol.shift));
  line("exponent", num(c.tol.exponent));

  out += "\n[asymptotics]\n";
  const auto& a = c.asymptotics;
  line("t_handoff", num(a.t_handoff));
  line("tau_end", num(a.tau_end));
  line("dtau", num(a.dtau));
  line("store_every", std::to_string(a.store_every));
  line("K", std::to_string(a.K));
  line("fit_lo", num(a.fit_lo));
  line("fit_hi", num(a.fit_hi));
  line("tail_lo", num(a.tail_lo));
  line("tail_hi", num(a.tail_hi));
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Grid make_grid(const ExperimentConfig& cfg) {
  return build_grid(cfg.domain.kind, cfg.domain.dim, cfg.domain.size, cfg.N);
}

}  // namespace pme::lab
