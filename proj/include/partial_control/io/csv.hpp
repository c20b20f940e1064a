#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../control_sim.hpp"
#include "../disturbance.hpp"
#include "../orbit.hpp"
#include "../safe_set.hpp"
#include "../safety_solver.hpp"

namespace partial_control::io {

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw std::runtime_error("missing column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

inline Row split_csv_line(const std::string& line) {
  Row out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  return t;
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c) out << ',';
    out << row[c];
  }
  out << '\n';
}

inline Row coordinate_header(int dimension, const std::string& prefix = "") {
  if (dimension == 1) return {prefix + "x"};
  return {prefix + "x", prefix + "y"};
}

inline void append_state(Row& row, State q, int dimension) {
  row.push_back(format_double(q.x));
  if (dimension == 2) row.push_back(format_double(q.y));
}

/// index, coordinates..., U
inline void write_safety_csv(const std::filesystem::path& path, const SafetyFunction& u) {
  auto out = open_output(path);
  const int dim = u.region.dimension();
  Row header{"index"};
  for (auto& h : coordinate_header(dim)) header.push_back(h);
  header.push_back("U");
  write_row(out, header);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    Row row{std::to_string(i)};
    append_state(row, u.region.point(i), dim);
    row.push_back(format_double(u.values[i]));
    write_row(out, row);
  }
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  auto out = open_output(path);
  write_row(out, {"key", "value"});
  for (const auto& [k, v] : kv) write_row(out, {k, v});
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  const Table t = read_csv(path);
  std::map<std::string, std::string> kv;
  for (const auto& r : t.rows) kv[r.at(0)] = r.size() > 1 ? r[1] : "";
  return kv;
}

/// Grid description and solver metadata, enough to rebuild the region.
inline KeyValues safety_metadata(const SafetyFunction& u) {
  const GridRegion& g = u.region;
  KeyValues kv{{"dimension", std::to_string(g.dimension())}};
  for (int d = 0; d < g.dimension(); ++d) {
    const std::string axis = d == 0 ? "x" : "y";
    kv.emplace_back("lower_" + axis, format_double(g.lower(d)));
    kv.emplace_back("upper_" + axis, format_double(g.upper(d)));
    kv.emplace_back("points_" + axis, std::to_string(g.points(d)));
  }
  kv.emplace_back("sweeps", std::to_string(u.sweeps));
  kv.emplace_back("converged", u.converged ? "true" : "false");
  kv.emplace_back("monotone", u.monotone ? "true" : "false");
  kv.emplace_back("min_value", format_double(u.min_value));
  kv.emplace_back("argmin_count", std::to_string(u.argmin.size()));
  return kv;
}

inline GridRegion region_from_metadata(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("metadata lacks '" + k + "'");
    return it->second;
  };
  const int dim = std::stoi(get("dimension"));
  std::vector<double> lo, hi;
  std::vector<std::size_t> n;
  for (int d = 0; d < dim; ++d) {
    const std::string axis = d == 0 ? "x" : "y";
    lo.push_back(parse_double(get("lower_" + axis)));
    hi.push_back(parse_double(get("upper_" + axis)));
    n.push_back(std::stoul(get("points_" + axis)));
  }
  return GridRegion(lo, hi, n);
}

/// U values from a safety CSV, in index order.
inline std::vector<double> read_safety_values(const std::filesystem::path& path) {
  const Table t = read_csv(path);
  const std::size_t col = t.column("U");
  std::vector<double> u;
  u.reserve(t.rows.size());
  for (const auto& r : t.rows) u.push_back(parse_double(r.at(col)));
  return u;
}

/// One row per member: index, coordinates...
inline void write_safe_set_csv(const std::filesystem::path& path, const SafeSet& set) {
  auto out = open_output(path);
  const int dim = set.region.dimension();
  Row header{"index"};
  for (auto& h : coordinate_header(dim)) header.push_back(h);
  write_row(out, header);
  for (std::size_t i = 0; i < set.mask.size(); ++i) {
    if (!set.mask[i]) continue;
    Row row{std::to_string(i)};
    append_state(row, set.region.point(i), dim);
    write_row(out, row);
  }
}

inline SafeSet read_safe_set_csv(const std::filesystem::path& path, const GridRegion& region, double u0) {
  const Table t = read_csv(path);
  const std::size_t col = t.column("index");
  std::vector<std::uint8_t> mask(region.size(), 0);
  for (const auto& r : t.rows) mask.at(std::stoul(r.at(col))) = 1;
  return make_safe_set(region, u0, std::move(mask));
}

/// step, state..., xi..., u..., u_norm. Row n holds q_n and the disturbance
/// and control that lead to q_{n+1}; the final state's row leaves them empty.
inline void write_orbit_csv(const std::filesystem::path& path, const ControlledOrbit& orbit, int dimension) {
  auto out = open_output(path);
  Row header{"step"};
  for (auto& h : coordinate_header(dimension)) header.push_back(h);
  for (auto& h : coordinate_header(dimension, "xi_")) header.push_back(h);
  for (auto& h : coordinate_header(dimension, "u_")) header.push_back(h);
  header.push_back("u_norm");
  write_row(out, header);
  for (std::size_t n = 0; n < orbit.states.size(); ++n) {
    Row row{std::to_string(n)};
    append_state(row, orbit.states[n], dimension);
    if (n < orbit.controls.size()) {
      append_state(row, orbit.disturbances[n], dimension);
      append_state(row, orbit.controls[n], dimension);
      row.push_back(format_double(orbit.control_norms[n]));
    } else {
      row.resize(row.size() + 2 * dimension + 1);
    }
    write_row(out, row);
  }
}

inline ControlledOrbit read_orbit_csv(const std::filesystem::path& path) {
  const Table t = read_csv(path);
  const bool two = t.has_column("y");
  auto state = [&](const Row& r, const std::string& prefix) {
    State q{parse_double(r.at(t.column(prefix + "x"))), 0.0};
    if (two) q.y = parse_double(r.at(t.column(prefix + "y")));
    return q;
  };
  ControlledOrbit o;
  const std::size_t norm_col = t.column("u_norm");
  for (const auto& r : t.rows) {
    o.states.push_back(state(r, ""));
    if (norm_col < r.size() && !r[norm_col].empty()) {
      o.disturbances.push_back(state(r, "xi_"));
      o.controls.push_back(state(r, "u_"));
      o.control_norms.push_back(parse_double(r[norm_col]));
    }
  }
  return o;
}

/// seed, escaped_at (empty when the run never left Q).
inline void write_escapes_csv(const std::filesystem::path& path, const std::vector<EscapeRecord>& census) {
  auto out = open_output(path);
  write_row(out, {"seed", "escaped_at"});
  for (const auto& r : census)
    write_row(out, {std::to_string(r.seed), r.escaped_at ? std::to_string(*r.escaped_at) : ""});
}

inline std::vector<EscapeRecord> read_escapes_csv(const std::filesystem::path& path) {
  const Table t = read_csv(path);
  std::vector<EscapeRecord> out;
  for (const auto& r : t.rows) {
    EscapeRecord e{std::stoull(r.at(0)), std::nullopt};
    if (r.size() > 1 && !r[1].empty()) e.escaped_at = std::stoul(r[1]);
    out.push_back(e);
  }
  return out;
}

inline void write_samples_csv(const std::filesystem::path& path, const DisturbanceModel& model) {
  auto out = open_output(path);
  Row header{"sample"};
  for (auto& h : coordinate_header(model.dimension, "xi_")) header.push_back(h);
  write_row(out, header);
  for (std::size_t s = 0; s < model.samples.size(); ++s) {
    Row row{std::to_string(s)};
    append_state(row, model.samples[s], model.dimension);
    write_row(out, row);
  }
}

}  // namespace partial_control::io
