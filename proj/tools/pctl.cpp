// pctl: safety functions, safe sets and controlled orbits from the command line.
//
// Exit codes: 0 success, 1 configuration error, 2 non-convergence,
// 3 no safe set at the requested u0, 4 any other failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "partial_control/partial_control.hpp"

namespace pc = partial_control;
namespace io = partial_control::io;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNonConvergence = 2, kNoSafeSet = 3, kFailure = 4 };

// Flags that override the config file. Unset options leave the file's value.
struct Overrides {
  std::string config;
  std::optional<std::string> map;
  std::vector<std::string> params;
  std::vector<double> lower, upper;
  std::vector<std::size_t> points;
  std::optional<double> xi0;
  std::optional<std::string> norm;
  std::vector<double> spacing;
  std::optional<unsigned> max_sweeps, workers;
  std::optional<double> u0;
  bool sculpt_check = false;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::vector<double> start;
  std::optional<std::string> draw;
  std::optional<std::size_t> burn_in, census_runs, census_steps;
  std::vector<double> sweep_xi0;
  std::optional<std::string> output;
  bool no_csv = false, no_pgm = false;
  bool quiet = false;
};

void add_overrides(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.config, "JSON config file (comments allowed)");
  app.add_option("--map", o.map, "tent, henon, lozi, identity or shift");
  app.add_option("--param", o.params, "map parameter as name=value (repeatable)");
  app.add_option("--lower", o.lower, "region lower corner, comma separated")->delimiter(',');
  app.add_option("--upper", o.upper, "region upper corner, comma separated")->delimiter(',');
  app.add_option("--points", o.points, "grid points per axis, comma separated")->delimiter(',');
  app.add_option("--xi0", o.xi0, "disturbance bound");
  app.add_option("--norm", o.norm, "euclidean or chebyshev");
  app.add_option("--spacing", o.spacing, "disturbance sample spacing per axis")->delimiter(',');
  app.add_option("--max-sweeps", o.max_sweeps, "solver sweep limit");
  app.add_option("-j,--workers", o.workers, "worker threads (0: all cores)");
  app.add_option("--u0", o.u0, "control bound for the safe set (default min U)");
  app.add_flag("--sculpt-check", o.sculpt_check, "cross-check the safe set by sculpting");
  app.add_option("--steps", o.steps, "controlled orbit length");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--start", o.start, "orbit start point, comma separated")->delimiter(',');
  app.add_option("--draw", o.draw, "disturbance draws: lattice or continuous");
  app.add_option("--burn-in", o.burn_in, "steps dropped from the asymptotic set");
  app.add_option("--census-runs", o.census_runs, "uncontrolled runs in the escape census");
  app.add_option("--census-steps", o.census_steps, "step limit of each uncontrolled run");
  app.add_option("--sweep-xi0", o.sweep_xi0, "xi0 values for the sweep, comma separated")->delimiter(',');
  app.add_option("-o,--output", o.output, "output directory");
  app.add_flag("--no-csv", o.no_csv, "skip CSV outputs");
  app.add_flag("--no-pgm", o.no_pgm, "skip PGM outputs");
  app.add_flag("-q,--quiet", o.quiet, "no progress messages");
}

pc::ExperimentConfig resolve(const Overrides& o) {
  pc::ExperimentConfig c = o.config.empty() ? pc::defaults_for(o.map.value_or("tent")) : pc::load_config(o.config);
  if (o.map && !o.config.empty()) c.map = *o.map;
  for (const auto& p : o.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw pc::ConfigError("--param: expected name=value, got '" + p + "'");
    try {
      c.parameters[p.substr(0, eq)] = io::parse_double(p.substr(eq + 1));
    } catch (const std::runtime_error& e) {
      throw pc::ConfigError("--param " + p + ": " + e.what());
    }
  }
  if (!o.lower.empty()) c.lower = o.lower;
  if (!o.upper.empty()) c.upper = o.upper;
  if (!o.points.empty()) c.points = o.points;
  if (o.xi0) c.xi0 = *o.xi0;
  if (o.norm) {
    try {
      c.norm = pc::parse_norm(*o.norm);
    } catch (const std::invalid_argument& e) {
      throw pc::ConfigError(std::string("--norm: ") + e.what());
    }
  }
  if (!o.spacing.empty()) c.spacing = o.spacing;
  if (o.max_sweeps) c.max_sweeps = *o.max_sweeps;
  if (o.workers) c.workers = *o.workers;
  if (o.u0) c.u0 = *o.u0;
  if (o.sculpt_check) c.sculpt_check = true;
  if (o.steps) c.orbit_steps = *o.steps;
  if (o.seed) c.seed = *o.seed;
  if (!o.start.empty()) {
    if (o.start.size() > 2) throw pc::ConfigError("--start: expected 1 or 2 coordinates");
    c.start = pc::State{o.start[0], o.start.size() > 1 ? o.start[1] : 0.0};
  }
  if (o.draw) {
    try {
      c.draw = pc::parse_disturbance_draw(*o.draw);
    } catch (const std::invalid_argument& e) {
      throw pc::ConfigError(std::string("--draw: ") + e.what());
    }
  }
  if (o.burn_in) c.burn_in = *o.burn_in;
  if (o.census_runs) c.census_runs = *o.census_runs;
  if (o.census_steps) c.census_steps = *o.census_steps;
  if (!o.sweep_xi0.empty()) c.sweep_xi0 = o.sweep_xi0;
  if (o.output) c.output = *o.output;
  if (o.no_csv) c.csv = false;
  if (o.no_pgm) c.pgm = false;
  pc::validate(c);
  return c;
}

void print_report(const pc::ExperimentReport& r) {
  for (const auto& [k, v] : pc::report_rows(r)) std::printf("%-20s %s\n", k.c_str(), v.c_str());
}

std::ostream* progress(const Overrides& o) { return o.quiet ? nullptr : &std::cerr; }

pc::SafetyFunction solve(const pc::ExperimentConfig& c, std::ostream* log) {
  pc::SolverOptions so;
  so.workers = c.workers;
  if (log)
    so.progress = [log](const pc::SweepStats& s) {
      *log << "sweep " << s.sweep << ": changed " << s.changed << ", min " << io::format_double(s.min_value) << "\n";
    };
  auto u = pc::compute_safety_function(c.map_system(), c.region(), c.disturbance(), c.max_sweeps, so);
  if (c.csv) {
    io::write_safety_csv(c.output / "safety.csv", u);
    io::write_key_values(c.output / "safety_meta.csv", io::safety_metadata(u));
  }
  if (c.pgm) io::write_pgm(c.output / "heatmap.pgm", io::heatmap_image(u));
  if (!u.converged)
    throw pc::NonConvergenceError("no convergence within " + std::to_string(c.max_sweeps) + " sweeps");
  return u;
}

void write_set(const pc::ExperimentConfig& c, const pc::SafeSet& s, const std::string& stem) {
  if (c.csv) io::write_safe_set_csv(c.output / (stem + ".csv"), s);
  if (c.pgm) io::write_pgm(c.output / (stem + ".pgm"), io::mask_image(s));
}

int cmd_safety(const Overrides& o) {
  const auto c = resolve(o);
  const auto u = solve(c, progress(o));
  std::printf("min_value %s\nsweeps %u\nargmin_count %zu\n", io::format_double(u.min_value).c_str(), u.sweeps,
              u.argmin.size());
  return kOk;
}

int cmd_safeset(const Overrides& o, const std::string& mode) {
  const auto c = resolve(o);
  const auto model = c.disturbance();
  std::optional<pc::SafeSet> extracted, sculpted;
  double u0 = c.u0.value_or(0.0);
  if (mode != "sculpt" || !c.u0) {
    const auto u = solve(c, progress(o));
    u0 = c.u0.value_or(u.min_value);
    extracted = pc::extract_safe_set(u, u0);
    std::printf("strips %zu\n", pc::count_strips(u));
  }
  if (mode != "extract") {
    pc::SculptOptions so;
    so.workers = c.workers;
    sculpted = pc::sculpt_safe_set(c.map_system(), c.region(), model, u0, so);
  }
  std::printf("u0 %s\n", io::format_double(u0).c_str());
  if (mode == "extract" || mode == "compare") {
    write_set(c, *extracted, "safeset");
    std::printf("extracted members %zu components %zu\n", extracted->member_count,
                pc::count_components(*extracted));
  }
  if (mode == "sculpt" || mode == "compare") {
    write_set(c, *sculpted, "sculpt");
    if (sculpted->empty()) throw pc::NoSafeSetError("sculpting removed every point at u0 = " + io::format_double(u0));
    std::printf("sculpted members %zu components %zu\n", sculpted->member_count, pc::count_components(*sculpted));
  }
  if (mode == "compare") {
    const bool same = extracted->mask == sculpted->mask;
    std::printf("%s\n", same ? "agree" : "DIFFER");
    return same ? kOk : kFailure;
  }
  return kOk;
}

int cmd_orbit(const Overrides& o, bool uncontrolled, bool census) {
  const auto c = resolve(o);
  const auto f = c.map_system();
  const auto g = c.region();
  const auto model = c.disturbance();
  if (census) {
    const auto runs = pc::escape_census(f, g, model, c.census_runs, c.census_steps, c.seed, c.workers);
    if (c.csv) io::write_escapes_csv(c.output / "escapes.csv", runs);
    std::printf("escaped %.17g of %zu runs\n", pc::escape_fraction(runs), runs.size());
    return kOk;
  }
  if (uncontrolled) {
    pc::State start;
    if (c.start) {
      start = *c.start;
    } else {
      std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
      start = pc::random_point(g, rng);
    }
    const auto orbit = pc::run_uncontrolled(f, g, model, start, c.census_steps, c.seed);
    if (c.csv) io::write_orbit_csv(c.output / "uncontrolled.csv", orbit, g.dimension());
    if (orbit.escaped_at)
      std::printf("escaped at step %zu\n", *orbit.escaped_at);
    else
      std::printf("stayed in Q for %zu steps\n", orbit.steps());
    return kOk;
  }
  const auto u = solve(c, progress(o));
  const auto set = pc::extract_safe_set(u, c.u0.value_or(u.min_value));
  pc::OrbitOptions oo;
  oo.draw = c.draw;
  const auto orbit = pc::run_controlled(f, set, model, pc::orbit_start(c, set), c.orbit_steps, c.seed, oo);
  if (c.csv) io::write_orbit_csv(c.output / "orbit.csv", orbit, g.dimension());
  std::printf("steps %zu\nu0 %s\nmax_control_norm %s\n", orbit.steps(), io::format_double(set.u0).c_str(),
              io::format_double(orbit.max_control_norm()).c_str());
  return kOk;
}

int cmd_run(const Overrides& o) {
  print_report(pc::run_experiment(resolve(o), progress(o)));
  return kOk;
}

int cmd_sweep(const Overrides& o) {
  const auto items = pc::run_sweep(resolve(o), progress(o));
  std::printf("%-12s %-22s %-8s %-10s %-6s %-6s %s\n", "xi0", "u0", "members", "components", "strips", "sweeps",
              "status");
  bool all_ok = true;
  for (const auto& it : items) {
    if (it.report)
      std::printf("%-12s %-22s %-8zu %-10zu %-6zu %-6u %s\n", io::format_double(it.xi0).c_str(),
                  io::format_double(it.report->u0).c_str(), it.report->member_count, it.report->components,
                  it.report->strips, it.report->sweeps, it.status.c_str());
    else
      std::printf("%-12s %-22s %-8s %-10s %-6s %-6s %s\n", io::format_double(it.xi0).c_str(), "", "", "", "", "",
                  it.status.c_str());
    all_ok = all_ok && it.report.has_value();
  }
  return all_ok ? kOk : kFailure;
}

int cmd_report(const std::string& dir) {
  const auto r = pc::summarize_outputs(dir);
  print_report(r);
  const std::filesystem::path saved = std::filesystem::path(dir) / "report.csv";
  if (std::filesystem::exists(saved) && !(pc::read_report(saved) == r)) {
    std::fprintf(stderr, "report.csv disagrees with the recomputed report\n");
    return kFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial control of chaotic maps: safety functions, safe sets, controlled orbits"};
  app.require_subcommand(1);

  Overrides o;
  std::string safeset_mode = "extract";
  bool uncontrolled = false, census = false;
  std::string report_dir = "out";

  auto* run = app.add_subcommand("run", "full pipeline with all outputs and a report");
  add_overrides(*run, o);
  auto* safety = app.add_subcommand("safety", "compute the safety function");
  add_overrides(*safety, o);
  auto* safeset = app.add_subcommand("safeset", "extract, sculpt or compare safe sets");
  add_overrides(*safeset, o);
  safeset->add_option("--mode", safeset_mode, "extract, sculpt or compare")
      ->check(CLI::IsMember({"extract", "sculpt", "compare"}));
  auto* orbit = app.add_subcommand("orbit", "controlled orbit, uncontrolled orbit or escape census");
  add_overrides(*orbit, o);
  orbit->add_flag("--uncontrolled", uncontrolled, "free orbit from --start (or a random point)");
  orbit->add_flag("--census", census, "escape census of uncontrolled runs from random starts");
  auto* sweep = app.add_subcommand("sweep", "run the pipeline for each xi0 in the sweep list");
  add_overrides(*sweep, o);
  auto* report = app.add_subcommand("report", "recompute the report from a run's CSV outputs");
  report->add_option("dir", report_dir, "output directory of a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (safety->parsed()) return cmd_safety(o);
    if (safeset->parsed()) return cmd_safeset(o, safeset_mode);
    if (orbit->parsed()) return cmd_orbit(o, uncontrolled, census);
    if (sweep->parsed()) return cmd_sweep(o);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const pc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const pc::NonConvergenceError& e) {
    std::fprintf(stderr, "non-convergence: %s\n", e.what());
    return kNonConvergence;
  } catch (const pc::NoSafeSetError& e) {
    std::fprintf(stderr, "no safe set: %s\n", e.what());
    return kNoSafeSet;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
