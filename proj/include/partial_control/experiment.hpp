#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "control_sim.hpp"
#include "io/csv.hpp"
#include "io/pgm.hpp"
#include "safe_set.hpp"
#include "safety_solver.hpp"

namespace partial_control {

/// The solver hit max_sweeps. Safety outputs are written before this is thrown.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentReport {
  std::string map;
  double xi0 = 0.0;
  std::size_t samples = 0;
  double min_value = 0.0;
  unsigned sweeps = 0;
  bool converged = false;
  bool monotone = false;
  double u0 = 0.0;
  std::size_t member_count = 0;
  std::size_t components = 0;
  std::size_t strips = 0;
  std::optional<bool> sculpt_agrees;
  std::size_t orbit_steps = 0;
  double max_control_norm = 0.0;
  std::size_t asymptotic_count = 0;
  std::optional<std::size_t> uncontrolled_escape;
  std::size_t census_runs = 0;
  std::size_t census_escaped = 0;
  /// Median escape step over the runs that escaped.
  std::optional<std::size_t> median_escape;

  double escape_fraction() const {
    return census_runs ? static_cast<double>(census_escaped) / static_cast<double>(census_runs) : 0.0;
  }
  bool operator==(const ExperimentReport&) const = default;
};

namespace detail {

inline std::string opt(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }
inline std::string flag(bool b) { return b ? "true" : "false"; }

inline std::optional<std::size_t> median(std::vector<std::size_t> v) {
  if (v.empty()) return std::nullopt;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

inline void census_summary(ExperimentReport& r, const std::vector<EscapeRecord>& census) {
  std::vector<std::size_t> times;
  for (const auto& e : census)
    if (e.escaped_at) times.push_back(*e.escaped_at);
  r.census_runs = census.size();
  r.census_escaped = times.size();
  r.median_escape = median(std::move(times));
}

inline void orbit_summary(ExperimentReport& r, const GridRegion& g, const ControlledOrbit& orbit,
                          std::size_t burn_in) {
  r.orbit_steps = orbit.steps();
  r.max_control_norm = orbit.max_control_norm();
  r.asymptotic_count = orbit.states.size() > burn_in ? asymptotic_safe_set(g, orbit, burn_in).member_count : 0;
}

}  // namespace detail

inline io::KeyValues report_rows(const ExperimentReport& r) {
  using io::format_double;
  return {{"map", r.map},
          {"xi0", format_double(r.xi0)},
          {"samples", std::to_string(r.samples)},
          {"min_value", format_double(r.min_value)},
          {"sweeps", std::to_string(r.sweeps)},
          {"converged", detail::flag(r.converged)},
          {"monotone", detail::flag(r.monotone)},
          {"u0", format_double(r.u0)},
          {"member_count", std::to_string(r.member_count)},
          {"components", std::to_string(r.components)},
          {"strips", std::to_string(r.strips)},
          {"sculpt_agrees", r.sculpt_agrees ? detail::flag(*r.sculpt_agrees) : ""},
          {"orbit_steps", std::to_string(r.orbit_steps)},
          {"max_control_norm", format_double(r.max_control_norm)},
          {"asymptotic_count", std::to_string(r.asymptotic_count)},
          {"uncontrolled_escape", detail::opt(r.uncontrolled_escape)},
          {"census_runs", std::to_string(r.census_runs)},
          {"census_escaped", std::to_string(r.census_escaped)},
          {"escape_fraction", format_double(r.escape_fraction())},
          {"median_escape", detail::opt(r.median_escape)}};
}

inline ExperimentReport read_report(const std::filesystem::path& path) {
  const auto kv = io::read_key_values(path);
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error(path.string() + " lacks '" + k + "'");
    return it->second;
  };
  auto opt = [&](const std::string& k) -> std::optional<std::size_t> {
    const std::string v = get(k);
    if (v.empty()) return std::nullopt;
    return std::stoul(v);
  };
  ExperimentReport r;
  r.map = get("map");
  r.xi0 = io::parse_double(get("xi0"));
  r.samples = std::stoul(get("samples"));
  r.min_value = io::parse_double(get("min_value"));
  r.sweeps = static_cast<unsigned>(std::stoul(get("sweeps")));
  r.converged = get("converged") == "true";
  r.monotone = get("monotone") == "true";
  r.u0 = io::parse_double(get("u0"));
  r.member_count = std::stoul(get("member_count"));
  r.components = std::stoul(get("components"));
  r.strips = std::stoul(get("strips"));
  if (const std::string s = get("sculpt_agrees"); !s.empty()) r.sculpt_agrees = s == "true";
  r.orbit_steps = std::stoul(get("orbit_steps"));
  r.max_control_norm = io::parse_double(get("max_control_norm"));
  r.asymptotic_count = std::stoul(get("asymptotic_count"));
  r.uncontrolled_escape = opt("uncontrolled_escape");
  r.census_runs = std::stoul(get("census_runs"));
  r.census_escaped = std::stoul(get("census_escaped"));
  r.median_escape = opt("median_escape");
  return r;
}

/// Start of the controlled orbit: the configured point, else the
/// lowest-index member.
inline State orbit_start(const ExperimentConfig& config, const SafeSet& set) {
  if (!config.start) return set.region.point(set.members().front());
  try {
    require_member(set, *config.start);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("orbit.start: ") + e.what());
  }
  return *config.start;
}

/**
 * Full pipeline: safety function, safe set, optional sculpting cross-check,
 * controlled orbit, one uncontrolled orbit from the same start, and an
 * escape census from random starts.
 *
 * Files written to config.output when csv is on:
 *   run.csv samples.csv safety.csv safety_meta.csv safeset.csv
 *   safeset_meta.csv [sculpt.csv] orbit.csv uncontrolled.csv escapes.csv
 *   report.csv
 * and heatmap.pgm, mask.pgm when pgm is on.
 */
inline ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  validate(config);
  namespace fs = std::filesystem;
  const fs::path dir = config.output;
  const MapSystem f = config.map_system();
  const GridRegion g = config.region();
  const DisturbanceModel model = config.disturbance();
  auto note = [&](const std::string& s) {
    if (log) *log << s << std::endl;
  };

  ExperimentReport r;
  r.map = f.name();
  r.xi0 = config.xi0;
  r.samples = model.samples.size();

  if (config.csv) {
    io::write_key_values(dir / "run.csv", {{"map", f.name()},
                                           {"xi0", io::format_double(config.xi0)},
                                           {"norm", std::string(to_string(config.norm))},
                                           {"samples", std::to_string(model.samples.size())},
                                           {"seed", std::to_string(config.seed)},
                                           {"draw", std::string(to_string(config.draw))},
                                           {"burn_in", std::to_string(config.burn_in)}});
    io::write_samples_csv(dir / "samples.csv", model);
  }

  note("safety: " + f.name() + ", " + std::to_string(g.size()) + " points, " +
       std::to_string(model.samples.size()) + " samples");
  SolverOptions so;
  so.workers = config.workers;
  if (log)
    so.progress = [log](const SweepStats& s) {
      *log << "  sweep " << s.sweep << ": changed " << s.changed << ", min " << io::format_double(s.min_value)
           << std::endl;
    };
  const SafetyFunction u = compute_safety_function(f, g, model, config.max_sweeps, so);
  r.min_value = u.min_value;
  r.sweeps = u.sweeps;
  r.converged = u.converged;
  r.monotone = u.monotone;
  if (config.csv) {
    io::write_safety_csv(dir / "safety.csv", u);
    io::write_key_values(dir / "safety_meta.csv", io::safety_metadata(u));
  }
  if (config.pgm) io::write_pgm(dir / "heatmap.pgm", io::heatmap_image(u));
  if (!u.converged)
    throw NonConvergenceError("safety function did not converge within " + std::to_string(config.max_sweeps) +
                              " sweeps");

  const double u0 = config.u0.value_or(u.min_value);
  const SafeSet set = extract_safe_set(u, u0);
  r.u0 = u0;
  r.member_count = set.member_count;
  r.components = count_components(set);
  r.strips = count_strips(u);
  note("safe set: u0 " + io::format_double(u0) + ", " + std::to_string(set.member_count) + " members, " +
       std::to_string(r.components) + " components");
  if (config.csv) {
    io::write_safe_set_csv(dir / "safeset.csv", set);
    io::write_key_values(dir / "safeset_meta.csv", {{"u0", io::format_double(u0)},
                                                    {"threshold", io::format_double(membership_threshold(u0))},
                                                    {"strip_level", io::format_double(strip_level(u))}});
  }
  if (config.pgm) io::write_pgm(dir / "mask.pgm", io::mask_image(set));

  if (config.sculpt_check) {
    SculptOptions opts;
    opts.workers = config.workers;
    const SafeSet sculpted = sculpt_safe_set(f, g, model, u0, opts);
    r.sculpt_agrees = sculpted.mask == set.mask;
    note(std::string("sculpt check: ") + (*r.sculpt_agrees ? "agrees" : "DIFFERS"));
    if (config.csv) io::write_safe_set_csv(dir / "sculpt.csv", sculpted);
  }

  const State start = orbit_start(config, set);
  OrbitOptions oo;
  oo.draw = config.draw;
  const ControlledOrbit orbit = run_controlled(f, set, model, start, config.orbit_steps, config.seed, oo);
  detail::orbit_summary(r, g, orbit, config.burn_in);
  const ControlledOrbit free = run_uncontrolled(f, g, model, start, config.census_steps, config.seed);
  r.uncontrolled_escape = free.escaped_at;
  note("orbit: " + std::to_string(orbit.steps()) + " steps, max |u| " + io::format_double(r.max_control_norm));
  if (config.csv) {
    io::write_orbit_csv(dir / "orbit.csv", orbit, g.dimension());
    io::write_orbit_csv(dir / "uncontrolled.csv", free, g.dimension());
  }

  const auto census = escape_census(f, g, model, config.census_runs, config.census_steps, config.seed, config.workers);
  detail::census_summary(r, census);
  note("census: " + std::to_string(r.census_escaped) + "/" + std::to_string(r.census_runs) + " escaped");
  if (config.csv) {
    io::write_escapes_csv(dir / "escapes.csv", census);
    io::write_key_values(dir / "report.csv", report_rows(r));
  }
  return r;
}

/// Rebuilds the report of a finished run from its CSV outputs alone.
inline ExperimentReport summarize_outputs(const std::filesystem::path& dir) {
  const auto run = io::read_key_values(dir / "run.csv");
  const auto meta = io::read_key_values(dir / "safety_meta.csv");
  const GridRegion g = io::region_from_metadata(meta);
  SafetyFunction u;
  u.region = g;
  u.values = io::read_safety_values(dir / "safety.csv");
  if (u.values.size() != g.size()) throw std::runtime_error("safety.csv does not match the grid");
  summarize(u);
  u.sweeps = static_cast<unsigned>(std::stoul(meta.at("sweeps")));
  u.converged = meta.at("converged") == "true";
  u.monotone = meta.at("monotone") == "true";

  ExperimentReport r;
  r.map = run.at("map");
  r.xi0 = io::parse_double(run.at("xi0"));
  r.samples = std::stoul(run.at("samples"));
  r.min_value = u.min_value;
  r.sweeps = u.sweeps;
  r.converged = u.converged;
  r.monotone = u.monotone;

  const auto set_meta = io::read_key_values(dir / "safeset_meta.csv");
  r.u0 = io::parse_double(set_meta.at("u0"));
  const SafeSet set = io::read_safe_set_csv(dir / "safeset.csv", g, r.u0);
  r.member_count = set.member_count;
  r.components = count_components(set);
  r.strips = count_strips(u);
  if (std::filesystem::exists(dir / "sculpt.csv"))
    r.sculpt_agrees = io::read_safe_set_csv(dir / "sculpt.csv", g, r.u0).mask == set.mask;

  detail::orbit_summary(r, g, io::read_orbit_csv(dir / "orbit.csv"), std::stoul(run.at("burn_in")));
  const ControlledOrbit free = io::read_orbit_csv(dir / "uncontrolled.csv");
  if (g.escapes(free.states.back())) r.uncontrolled_escape = free.states.size() - 1;
  detail::census_summary(r, io::read_escapes_csv(dir / "escapes.csv"));
  return r;
}

struct SweepItem {
  double xi0 = 0.0;
  std::vector<std::size_t> points;
  std::optional<ExperimentReport> report;
  /// "ok", or the failure message.
  std::string status;
};

inline std::string sweep_item_name(double xi0) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "xi0_%.6g", xi0);
  return buf;
}

/// run_experiment for each entry of config.sweep_xi0 (on the matching
/// sweep_points grid when given), each in its own subdirectory, then
/// sweep.csv with one row per entry. A failing entry is recorded and the
/// sweep moves on.
inline std::vector<SweepItem> run_sweep(const ExperimentConfig& config, std::ostream* log = nullptr) {
  if (config.sweep_xi0.empty()) throw ConfigError("sweep.xi0: empty list");
  std::vector<SweepItem> items;
  for (std::size_t k = 0; k < config.sweep_xi0.size(); ++k) {
    const double xi0 = config.sweep_xi0[k];
    ExperimentConfig c = config;
    c.xi0 = xi0;
    if (!config.sweep_points.empty()) c.points = config.sweep_points[k];
    c.output = config.output / sweep_item_name(xi0);
    SweepItem item{xi0, c.points, std::nullopt, "ok"};
    if (log) *log << "== xi0 " << io::format_double(xi0) << std::endl;
    try {
      item.report = run_experiment(c, log);
    } catch (const NonConvergenceError& e) {
      item.status = std::string("non-convergence: ") + e.what();
    } catch (const NoSafeSetError& e) {
      item.status = std::string("no safe set: ") + e.what();
    } catch (const std::exception& e) {
      item.status = std::string("error: ") + e.what();
    }
    items.push_back(std::move(item));
  }
  if (config.csv) {
    auto out = io::open_output(config.output / "sweep.csv");
    io::write_row(out, {"xi0", "points", "u0", "member_count", "components", "strips", "sweeps", "status"});
    for (const auto& it : items) {
      std::string points;
      for (std::size_t n : it.points) points += (points.empty() ? "" : "x") + std::to_string(n);
      io::Row row{io::format_double(it.xi0), points};
      if (it.report) {
        row.push_back(io::format_double(it.report->u0));
        row.push_back(std::to_string(it.report->member_count));
        row.push_back(std::to_string(it.report->components));
        row.push_back(std::to_string(it.report->strips));
        row.push_back(std::to_string(it.report->sweeps));
      } else {
        row.resize(7);
      }
      std::string status = it.status;
      std::replace(status.begin(), status.end(), ',', ';');
      row.push_back(status);
      io::write_row(out, row);
    }
  }
  return items;
}

}  // namespace partial_control
