#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival_search.hpp"
#include "disturbance.hpp"
#include "grid.hpp"
#include "maps.hpp"
#include "orbit.hpp"
#include "parallel.hpp"
#include "safe_set.hpp"

namespace partial_control {

/// How simulated disturbances are drawn.
enum class DisturbanceDraw {
  /// Uniform over the continuous ball.
  continuous,
  /// Uniform over the continuous ball, then moved to the nearest point of the
  /// solver's sample set: the disturbances the safety function accounts for.
  lattice,
};

inline std::string_view to_string(DisturbanceDraw d) { return d == DisturbanceDraw::continuous ? "continuous" : "lattice"; }

inline DisturbanceDraw parse_disturbance_draw(std::string_view s) {
  if (s == "continuous") return DisturbanceDraw::continuous;
  if (s == "lattice") return DisturbanceDraw::lattice;
  throw std::invalid_argument("unknown disturbance draw '" + std::string(s) + "' (expected continuous or lattice)");
}

/// Sample of `model` nearest to xi (lowest index on ties).
inline State nearest_sample(const DisturbanceModel& model, State xi) {
  const Metric m = model.metric();
  std::size_t best = 0;
  double bd = kInfinity;
  for (std::size_t s = 0; s < model.samples.size(); ++s) {
    const double d = m.distance(xi, model.samples[s]);
    if (d < bd) {
      bd = d;
      best = s;
    }
  }
  return model.samples[best];
}

template <class Rng>
State draw(const DisturbanceModel& model, DisturbanceDraw mode, Rng& rng) {
  const State xi = draw_disturbance(model, rng);
  return mode == DisturbanceDraw::lattice ? nearest_sample(model, xi) : xi;
}

/// Smallest-magnitude adjustment of u = target - image such that
/// image + u == target holds exactly in floating point.
inline double exact_offset(double image, double target) {
  double u = target - image;
  for (int k = 0; k < 64 && image + u != target; ++k)
    u = std::nextafter(u, image + u < target ? kInfinity : -kInfinity);
  if (image + u != target) throw std::logic_error("cannot represent control offset exactly");
  return u;
}

struct ControlStep {
  State next;
  State control;
  std::size_t index = kNoIndex;
};

/// Nearest-safe-point feedback over a fixed safe set.
class Controller {
 public:
  Controller(const SafeSet& set, Metric metric) : set_(set), search_(set_.region, metric) {
    if (set_.empty()) throw NoSafeSetError("controller needs a nonempty safe set");
    search_.assign(set_.indicator());
  }
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  const SafeSet& safe_set() const { return set_; }
  Metric metric() const { return search_.metric(); }

  /// Moves the disturbed image to the nearest safe point (lowest index on
  /// exact ties).
  ControlStep operator()(State disturbed) const {
    const Arrival a = search_.inner_min_lowest(disturbed);
    const State next = set_.region.point(a.index);
    State u{exact_offset(disturbed.x, next.x), 0.0};
    if (set_.region.dimension() == 2) u.y = exact_offset(disturbed.y, next.y);
    return {next, u, a.index};
  }

 private:
  SafeSet set_;
  ArrivalSearch search_;
};

inline ControlStep control_step(State disturbed_image, const SafeSet& set, Metric metric) {
  return Controller(set, metric)(disturbed_image);
}

struct OrbitOptions {
  DisturbanceDraw draw = DisturbanceDraw::lattice;
  /// Throw when a control exceeds the safe set's bound.
  bool enforce_bound = true;
};

inline std::size_t require_member(const SafeSet& set, State q) {
  if (set.region.escapes(q)) throw std::invalid_argument("start point lies outside the grid region");
  const std::size_t i = set.region.index_of(q);
  if (!set.contains(i)) throw std::invalid_argument("start point is not in the safe set");
  return i;
}

inline ControlledOrbit run_controlled(const MapSystem& map, const Controller& controller,
                                      const DisturbanceModel& model, State start, std::size_t steps,
                                      std::uint64_t seed, OrbitOptions options = {}) {
  const SafeSet& set = controller.safe_set();
  const std::size_t first = require_member(set, start);
  const Metric metric = controller.metric();
  const double limit = membership_threshold(set.u0);
  std::mt19937_64 rng(seed);
  ControlledOrbit orbit;
  orbit.seed = seed;
  orbit.u0 = set.u0;
  orbit.states.reserve(steps + 1);
  orbit.states.push_back(set.region.point(first));
  for (std::size_t n = 0; n < steps; ++n) {
    const State image = map(orbit.states.back());
    const State xi = draw(model, options.draw, rng);
    const ControlStep c = controller(image + xi);
    const double norm = metric.length(c.control);
    if (options.enforce_bound && norm > limit)
      throw std::logic_error("control " + std::to_string(norm) + " exceeds u0 = " + std::to_string(set.u0) +
                             " at step " + std::to_string(n));
    orbit.disturbances.push_back(xi);
    orbit.controls.push_back(c.control);
    orbit.control_norms.push_back(norm);
    orbit.states.push_back(c.next);
  }
  return orbit;
}

inline ControlledOrbit run_controlled(const MapSystem& map, const SafeSet& set, const DisturbanceModel& model,
                                      State start, std::size_t steps, std::uint64_t seed,
                                      OrbitOptions options = {}) {
  return run_controlled(map, Controller(set, model.metric()), model, start, steps, seed, options);
}

/// Free orbit (u = 0) until it leaves Q or max_steps is reached. The escaped
/// state, if any, is the last one stored.
inline ControlledOrbit run_uncontrolled(const MapSystem& map, const GridRegion& region,
                                        const DisturbanceModel& model, State start, std::size_t max_steps,
                                        std::uint64_t seed, DisturbanceDraw mode = DisturbanceDraw::continuous) {
  std::mt19937_64 rng(seed);
  ControlledOrbit orbit;
  orbit.seed = seed;
  orbit.states.push_back(start);
  if (region.escapes(start)) {
    orbit.escaped_at = 0;
    return orbit;
  }
  for (std::size_t n = 0; n < max_steps; ++n) {
    const State xi = draw(model, mode, rng);
    orbit.disturbances.push_back(xi);
    orbit.controls.push_back(State{});
    orbit.control_norms.push_back(0.0);
    orbit.states.push_back(map(orbit.states.back()) + xi);
    if (region.escapes(orbit.states.back())) {
      orbit.escaped_at = n + 1;
      break;
    }
  }
  return orbit;
}

/// Uniform random point of Q.
template <class Rng>
State random_point(const GridRegion& region, Rng& rng) {
  std::uniform_real_distribution<double> ux(region.lower(0), region.upper(0));
  State q{ux(rng), 0.0};
  if (region.dimension() == 2) {
    std::uniform_real_distribution<double> uy(region.lower(1), region.upper(1));
    q.y = uy(rng);
  }
  return q;
}

struct EscapeRecord {
  std::uint64_t seed = 0;
  std::optional<std::size_t> escaped_at;
};

/// Uncontrolled runs from random starts, one per seed in
/// [first_seed, first_seed + runs). Each run draws its start and its
/// disturbances from its own generator.
inline std::vector<EscapeRecord> escape_census(const MapSystem& map, const GridRegion& region,
                                               const DisturbanceModel& model, std::size_t runs,
                                               std::size_t max_steps, std::uint64_t first_seed,
                                               unsigned workers = 0,
                                               DisturbanceDraw mode = DisturbanceDraw::continuous) {
  std::vector<EscapeRecord> out(runs);
  parallel_for(runs, workers, [&](std::size_t r) {
    const std::uint64_t seed = first_seed + r;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const State start = random_point(region, rng);
    out[r] = {seed, run_uncontrolled(map, region, model, start, max_steps, seed, mode).escaped_at};
  });
  return out;
}

inline double escape_fraction(const std::vector<EscapeRecord>& census) {
  if (census.empty()) return 0.0;
  std::size_t escaped = 0;
  for (const auto& r : census) escaped += r.escaped_at.has_value();
  return static_cast<double>(escaped) / static_cast<double>(census.size());
}

}  // namespace partial_control
