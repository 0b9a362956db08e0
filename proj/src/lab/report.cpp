#include "pme/lab/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pme/error.hpp"

namespace pme::lab {

bool Check::pass() const {
  if (!std::isfinite(measured)) return false;
  switch (relation) {
    case Relation::near: return std::abs(measured - target) <= tolerance;
    case Relation::at_most: return measured <= target;
    case Relation::at_least: return measured >= target;
  }
  return false;
}

Check near(std::string criterion, double target, double tolerance, double measured) {
  return {std::move(criterion), Relation::near, target, tolerance, measured};
}

Check at_most(std::string criterion, double bound, double measured) {
  return {std::move(criterion), Relation::at_most, bound, 0.0, measured};
}

Check at_least(std::string criterion, double bound, double measured) {
  return {std::move(criterion), Relation::at_least, bound, 0.0, measured};
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  return out;
}

void write_table(const std::filesystem::path& path, const Table& table, const char* sep,
                 const char* lead) {
  std::ofstream out = open_for_write(path);
  out << lead;
  for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? sep : "") << table.header[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? sep : "") << format_number(row[c]);
    out << '\n';
  }
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw InvalidArgument(fmt::format("{}: '{}' is not a number", path.string(), s));
  return v;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const Table& table) {
  write_table(path, table, ",", "");
}

void write_dat(const std::filesystem::path& path, const Table& table) {
  write_table(path, table, " ", "# ");
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot read {}", path.string()));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(fmt::format("{} is empty", path.string()));
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(parse_double(cell, path));
    if (row.size() != t.header.size())
      throw InvalidArgument(fmt::format("{}: ragged row '{}'", path.string(), line));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_report(const std::filesystem::path& path, const std::vector<Check>& checks) {
  std::ofstream out = open_for_write(path);
  out << "criterion,target,measured,tolerance,pass\n";
  for (const Check& c : checks) {
    std::string target = format_number(c.target);
    if (c.relation == Relation::at_most) target = "<=" + target;
    if (c.relation == Relation::at_least) target = ">=" + target;
    out << c.criterion << ',' << target << ',' << format_number(c.measured) << ','
        << format_number(c.tolerance) << ',' << (c.pass() ? 1 : 0) << '\n';
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out = open_for_write(path);
  out << "stamp,node,value\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const std::string stamp = format_number(traj.times[k]);
    for (std::size_t i = 0; i < traj.fields[k].size(); ++i)
      out << stamp << ',' << i << ',' << format_number(traj.fields[k][i]) << '\n';
  }
}

Trajectory read_trajectory(const std::filesystem::path& path, const Grid& grid, Variable variable,
                           double exponent) {
  const Table t = read_csv(path);
  if (t.header != std::vector<std::string>{"stamp", "node", "value"})
    throw InvalidArgument(fmt::format("{} is not a trajectory file", path.string()));
  Trajectory traj;
  traj.grid = grid;
  traj.variable = variable;
  traj.exponent = exponent;
  const std::size_t n = grid.n();
  if (t.rows.size() % n != 0)
    throw InvalidArgument(fmt::format("{} does not match a grid of {} nodes", path.string(), n));
  for (std::size_t r = 0; r < t.rows.size(); r += n) {
    Field f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = t.rows[r + i];
      if (row[0] != t.rows[r][0] || row[1] != double(i))
        throw InvalidArgument(fmt::format("{}: row {} out of order", path.string(), r + i + 2));
      f[i] = row[2];
    }
    traj.times.push_back(t.rows[r][0]);
    traj.fields.push_back(std::move(f));
  }
  return traj;
}

}  // namespace pme::lab
