#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "control_sim.hpp"
#include "disturbance.hpp"
#include "grid.hpp"
#include "maps.hpp"
#include "state.hpp"

namespace partial_control {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string map = "tent";
  Parameters parameters;

  std::vector<double> lower{0.0};
  std::vector<double> upper{1.0};
  std::vector<std::size_t> points{1001};

  double xi0 = 0.05;
  Norm norm = Norm::euclidean;
  /// Disturbance sample spacing per axis; empty means the grid spacing.
  std::vector<double> spacing;

  unsigned max_sweeps = 1000;
  unsigned workers = 0;

  /// Control bound for the safe set; empty means min(U).
  std::optional<double> u0;
  bool sculpt_check = false;

  std::size_t orbit_steps = 10000;
  std::uint64_t seed = 1;
  /// Controlled-orbit start; empty means the lowest-index safe point.
  std::optional<State> start;
  DisturbanceDraw draw = DisturbanceDraw::lattice;
  std::size_t burn_in = 100;

  std::size_t census_runs = 1000;
  std::size_t census_steps = 1000;

  std::vector<double> sweep_xi0;
  /// Grid points per axis for each sweep entry; empty means region.points.
  std::vector<std::vector<std::size_t>> sweep_points;

  std::filesystem::path output = "out";
  bool csv = true;
  bool pgm = true;

  int dimension() const { return static_cast<int>(points.size()); }
  GridRegion region() const { return GridRegion(lower, upper, points); }
  MapSystem map_system() const { return make_map(map, parameters, dimension()); }
  DisturbanceModel disturbance(double bound) const {
    const GridRegion g = region();
    State h = g.spacing();
    if (!spacing.empty()) h = {spacing[0], spacing.size() > 1 ? spacing[1] : spacing[0]};
    return build_sample_set(bound, norm, dimension(), h);
  }
  DisturbanceModel disturbance() const { return disturbance(xi0); }
};

/// Reference settings for a built-in map: region, resolution and bound.
inline ExperimentConfig defaults_for(const std::string& map) {
  ExperimentConfig c;
  c.map = map;
  if (map == "henon" || map == "lozi") {
    c.lower = {-4.0, -4.0};
    c.upper = {4.0, 4.0};
    c.points = {500, 500};
    c.xi0 = map == "henon" ? 0.2 : 0.05;
  }
  return c;
}

/// Checks ranges and cross-field consistency.
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); };
  const std::size_t dim = c.points.size();
  if (dim < 1 || dim > 2) fail("region.points", "expected 1 or 2 axes");
  if (c.lower.size() != dim) fail("region.lower", "expected " + std::to_string(dim) + " values");
  if (c.upper.size() != dim) fail("region.upper", "expected " + std::to_string(dim) + " values");
  for (std::size_t d = 0; d < dim; ++d) {
    const std::string at = "[" + std::to_string(d) + "]";
    if (c.points[d] < 2) fail("region.points" + at, "must be at least 2");
    if (!(c.lower[d] < c.upper[d])) fail("region.lower" + at, "must be below region.upper" + at);
  }
  try {
    const MapSystem m = c.map_system();
    if (m.dimension() != static_cast<int>(dim))
      fail("map.name", "'" + c.map + "' is " + std::to_string(m.dimension()) + "-dimensional but the region has " +
                           std::to_string(dim) + " axes");
  } catch (const std::invalid_argument& e) {
    fail("map", e.what());
  }
  if (!(c.xi0 >= 0.0)) fail("disturbance.xi0", "must be nonnegative");
  if (!c.spacing.empty()) {
    if (c.spacing.size() != 1 && c.spacing.size() != dim) fail("disturbance.spacing", "expected 1 or " + std::to_string(dim) + " values");
    for (std::size_t d = 0; d < c.spacing.size(); ++d)
      if (!(c.spacing[d] > 0.0)) fail("disturbance.spacing[" + std::to_string(d) + "]", "must be positive");
  }
  if (c.max_sweeps < 1) fail("solver.max_sweeps", "must be at least 1");
  if (c.u0 && !(*c.u0 >= 0.0)) fail("safe_set.u0", "must be nonnegative");
  if (c.start) {
    if (c.region().escapes(*c.start)) fail("orbit.start", "lies outside the region");
  }
  for (std::size_t k = 0; k < c.sweep_xi0.size(); ++k)
    if (!(c.sweep_xi0[k] >= 0.0)) fail("sweep.xi0[" + std::to_string(k) + "]", "must be nonnegative");
  if (!c.sweep_points.empty() && c.sweep_points.size() != c.sweep_xi0.size())
    fail("sweep.points", "expected one entry per sweep.xi0 value");
  for (std::size_t k = 0; k < c.sweep_points.size(); ++k) {
    const std::string at = "sweep.points[" + std::to_string(k) + "]";
    if (c.sweep_points[k].size() != dim) fail(at, "expected " + std::to_string(dim) + " values");
    for (std::size_t n : c.sweep_points[k])
      if (n < 2) fail(at, "must be at least 2");
  }
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError((where.empty() ? "" : where + ".") + it.key() + ": unknown key");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline std::uint64_t count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(where + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + ": expected true or false");
  return j.get<bool>();
}

inline std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ConfigError(where + ": expected a number or an array of numbers");
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline State state(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.empty() || v.size() > 2) throw ConfigError(where + ": expected 1 or 2 coordinates");
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

}  // namespace detail

/// Parses a JSON document (comments allowed). Fields not given keep the
/// reference defaults of the named map.
inline ExperimentConfig parse_config(const std::string& text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  detail::reject_unknown(root, "", {"map", "region", "disturbance", "solver", "safe_set", "orbit", "census", "sweep",
                                    "output"});
  ExperimentConfig c;
  if (root.contains("map")) {
    const json& m = root["map"];
    detail::reject_unknown(m, "map", {"name", "parameters"});
    if (m.contains("name")) c = defaults_for(detail::text(m["name"], "map.name"));
    if (m.contains("parameters")) {
      const json& p = m["parameters"];
      if (!p.is_object()) throw ConfigError("map.parameters: expected an object");
      for (auto it = p.begin(); it != p.end(); ++it)
        c.parameters[it.key()] = detail::number(it.value(), "map.parameters." + it.key());
    }
  }
  if (root.contains("region")) {
    const json& r = root["region"];
    detail::reject_unknown(r, "region", {"lower", "upper", "points"});
    if (r.contains("lower")) c.lower = detail::numbers(r["lower"], "region.lower");
    if (r.contains("upper")) c.upper = detail::numbers(r["upper"], "region.upper");
    if (r.contains("points")) {
      const json& p = r["points"];
      c.points.clear();
      if (p.is_array()) {
        for (std::size_t k = 0; k < p.size(); ++k)
          c.points.push_back(detail::count(p[k], "region.points[" + std::to_string(k) + "]"));
      } else {
        c.points.push_back(detail::count(p, "region.points"));
      }
    }
  }
  if (root.contains("disturbance")) {
    const json& d = root["disturbance"];
    detail::reject_unknown(d, "disturbance", {"xi0", "norm", "spacing"});
    if (d.contains("xi0")) c.xi0 = detail::number(d["xi0"], "disturbance.xi0");
    if (d.contains("norm")) {
      try {
        c.norm = parse_norm(detail::text(d["norm"], "disturbance.norm"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("disturbance.norm: ") + e.what());
      }
    }
    if (d.contains("spacing") && !d["spacing"].is_null())
      c.spacing = detail::numbers(d["spacing"], "disturbance.spacing");
  }
  if (root.contains("solver")) {
    const json& s = root["solver"];
    detail::reject_unknown(s, "solver", {"max_sweeps", "workers"});
    if (s.contains("max_sweeps")) c.max_sweeps = static_cast<unsigned>(detail::count(s["max_sweeps"], "solver.max_sweeps"));
    if (s.contains("workers")) c.workers = static_cast<unsigned>(detail::count(s["workers"], "solver.workers"));
  }
  if (root.contains("safe_set")) {
    const json& s = root["safe_set"];
    detail::reject_unknown(s, "safe_set", {"u0", "sculpt_check"});
    if (s.contains("u0") && !s["u0"].is_null()) c.u0 = detail::number(s["u0"], "safe_set.u0");
    if (s.contains("sculpt_check")) c.sculpt_check = detail::boolean(s["sculpt_check"], "safe_set.sculpt_check");
  }
  if (root.contains("orbit")) {
    const json& o = root["orbit"];
    detail::reject_unknown(o, "orbit", {"steps", "seed", "start", "draw", "burn_in"});
    if (o.contains("steps")) c.orbit_steps = detail::count(o["steps"], "orbit.steps");
    if (o.contains("seed")) c.seed = detail::count(o["seed"], "orbit.seed");
    if (o.contains("start") && !o["start"].is_null()) c.start = detail::state(o["start"], "orbit.start");
    if (o.contains("draw")) {
      try {
        c.draw = parse_disturbance_draw(detail::text(o["draw"], "orbit.draw"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("orbit.draw: ") + e.what());
      }
    }
    if (o.contains("burn_in")) c.burn_in = detail::count(o["burn_in"], "orbit.burn_in");
  }
  if (root.contains("census")) {
    const json& e = root["census"];
    detail::reject_unknown(e, "census", {"runs", "max_steps"});
    if (e.contains("runs")) c.census_runs = detail::count(e["runs"], "census.runs");
    if (e.contains("max_steps")) c.census_steps = detail::count(e["max_steps"], "census.max_steps");
  }
  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    detail::reject_unknown(s, "sweep", {"xi0", "points"});
    if (s.contains("xi0")) c.sweep_xi0 = detail::numbers(s["xi0"], "sweep.xi0");
    if (s.contains("points")) {
      const json& p = s["points"];
      if (!p.is_array()) throw ConfigError("sweep.points: expected an array of per-axis point counts");
      for (std::size_t k = 0; k < p.size(); ++k) {
        const std::string at = "sweep.points[" + std::to_string(k) + "]";
        if (!p[k].is_array()) throw ConfigError(at + ": expected an array");
        std::vector<std::size_t> n;
        for (std::size_t d = 0; d < p[k].size(); ++d)
          n.push_back(detail::count(p[k][d], at + "[" + std::to_string(d) + "]"));
        c.sweep_points.push_back(std::move(n));
      }
    }
  }
  if (root.contains("output")) {
    const json& o = root["output"];
    detail::reject_unknown(o, "output", {"directory", "csv", "pgm"});
    if (o.contains("directory")) c.output = detail::text(o["directory"], "output.directory");
    if (o.contains("csv")) c.csv = detail::boolean(o["csv"], "output.csv");
    if (o.contains("pgm")) c.pgm = detail::boolean(o["pgm"], "output.pgm");
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace partial_control
