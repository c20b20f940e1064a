#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival_search.hpp"
#include "disturbance.hpp"
#include "grid.hpp"
#include "maps.hpp"
#include "orbit.hpp"
#include "parallel.hpp"
#include "safety_solver.hpp"

namespace partial_control {

/// Raised when a safe set is requested below min(U), or one turns out empty
/// where a nonempty set is required.
class NoSafeSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Membership threshold for control bound u0. The slack absorbs last-bit
/// noise in the selected values.
inline double membership_threshold(double u0) { return u0 + 1e-9 * std::max(1.0, u0); }

struct SafeSet {
  GridRegion region;
  double u0 = 0.0;
  std::vector<std::uint8_t> mask;
  std::size_t member_count = 0;

  bool empty() const { return member_count == 0; }
  bool contains(std::size_t i) const { return mask[i] != 0; }
  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    out.reserve(member_count);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) out.push_back(i);
    return out;
  }
  /// Field that is 0 on members and +inf elsewhere, for arrival searches.
  std::vector<double> indicator() const {
    std::vector<double> w(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) w[i] = mask[i] ? 0.0 : kInfinity;
    return w;
  }
};

inline SafeSet make_safe_set(const GridRegion& region, double u0, std::vector<std::uint8_t> mask) {
  SafeSet s{region, u0, std::move(mask), 0};
  s.member_count = static_cast<std::size_t>(std::count(s.mask.begin(), s.mask.end(), std::uint8_t{1}));
  return s;
}

/// {i : U[i] <= u0 (+ tolerance)}.
inline SafeSet extract_safe_set(const SafetyFunction& u, double u0) {
  if (!u.converged) throw std::invalid_argument("safety function has not converged");
  if (u0 < u.min_value)
    throw NoSafeSetError("no safe set exists below min(U) = " + std::to_string(u.min_value) +
                         " (requested u0 = " + std::to_string(u0) + ")");
  const double t = membership_threshold(u0);
  std::vector<std::uint8_t> mask(u.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = u.values[i] <= t;
  return make_safe_set(u.region, u0, std::move(mask));
}

inline SafeSet minimum_safe_set(const SafetyFunction& u) { return extract_safe_set(u, u.min_value); }

struct SculptOptions {
  unsigned max_rounds = 100000;
  unsigned workers = 0;
};

/**
 * Sculpting: start from the whole grid and repeatedly delete every point
 * with some disturbed image that has no surviving point within u0. Deletions
 * of one round take effect together at its end. Uses the same images, norm
 * and threshold as the solver and extract_safe_set. May return an empty set.
 */
inline SafeSet sculpt_safe_set(const MapSystem& map, const GridRegion& region, const DisturbanceModel& model,
                               double u0, SculptOptions options = {}) {
  if (!(u0 >= 0.0)) throw std::invalid_argument("u0 must be nonnegative");
  const ImageTable images = image_table(map, region, model);
  const double t = membership_threshold(u0);
  const std::size_t n = region.size();
  std::vector<std::uint8_t> alive(n, 1), keep(n, 1);
  ArrivalSearch search(region, model.metric());
  std::vector<double> field(n, 0.0);
  const std::size_t chunk = 1024;
  const std::size_t chunks = (n + chunk - 1) / chunk;

  for (unsigned round = 0;; ++round) {
    if (round >= options.max_rounds)
      throw std::runtime_error("sculpting did not settle within " + std::to_string(options.max_rounds) + " rounds");
    search.assign(field);
    parallel_for(chunks, options.workers, [&](std::size_t c) {
      const std::size_t end = std::min(n, (c + 1) * chunk);
      std::size_t hint = kNoIndex;
      for (std::size_t i = c * chunk; i < end; ++i) {
        if (!alive[i]) continue;
        bool ok = true;
        for (std::size_t s = 0; s < images.samples_per_point() && ok; ++s) {
          const State x = images.image(i, s);
          if (search.admits(x, 0.0, t, hint)) continue;
          const auto j = search.cover(x, 0.0, t);
          if (j) hint = *j;
          ok = j.has_value();
        }
        keep[i] = ok;
      }
    });
    std::size_t removed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && !keep[i]) {
        alive[i] = 0;
        field[i] = kInfinity;
        ++removed;
      }
    }
    if (removed == 0) break;
  }
  return make_safe_set(region, u0, std::move(alive));
}

/// Connected components of the member mask: maximal runs in 1D,
/// 8-neighbour connectivity in 2D.
inline std::size_t count_components(const SafeSet& set) {
  if (set.empty()) throw NoSafeSetError("cannot count components of an empty safe set");
  const GridRegion& g = set.region;
  const std::size_t nx = g.points(0);
  if (g.dimension() == 1) {
    std::size_t runs = 0;
    for (std::size_t i = 0; i < nx; ++i)
      if (set.mask[i] && (i == 0 || !set.mask[i - 1])) ++runs;
    return runs;
  }
  const std::size_t ny = g.points(1);
  std::vector<std::uint8_t> seen(set.mask.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  for (std::size_t start = 0; start < set.mask.size(); ++start) {
    if (!set.mask[start] || seen[start]) continue;
    ++components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const std::size_t cx = c % nx, cy = c / nx;
      for (std::size_t y = cy > 0 ? cy - 1 : 0; y <= std::min(cy + 1, ny - 1); ++y)
        for (std::size_t x = cx > 0 ? cx - 1 : 0; x <= std::min(cx + 1, nx - 1); ++x) {
          const std::size_t j = x + nx * y;
          if (set.mask[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
    }
  }
  return components;
}

/// Grid-resolution level for strip counting: min(U) plus the finest grid
/// spacing. The exact minimum set of a 2D grid is a dotted trace of each
/// strip; one grid step above it the traces close up.
inline double strip_level(const SafetyFunction& u) {
  double h = u.region.spacing(0);
  if (u.region.dimension() == 2) h = std::min(h, u.region.spacing(1));
  return u.min_value + h;
}

/// Number of strips crossing the grid rows: the median over rows of the
/// count of maximal member runs along x (upper median for an even number of
/// rows). In 1D this is the number of runs.
inline std::size_t count_strips(const SafeSet& set) {
  if (set.empty()) throw NoSafeSetError("cannot count strips of an empty safe set");
  const GridRegion& g = set.region;
  const std::size_t nx = g.points(0), ny = g.points(1);
  std::vector<std::size_t> runs(ny, 0);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix)
      if (set.mask[ix + nx * iy] && (ix == 0 || !set.mask[ix - 1 + nx * iy])) ++runs[iy];
  std::nth_element(runs.begin(), runs.begin() + ny / 2, runs.end());
  return runs[ny / 2];
}

/// Strips of the set one grid step above the minimum.
inline std::size_t count_strips(const SafetyFunction& u) { return count_strips(extract_safe_set(u, strip_level(u))); }

/// Grid points visited by the orbit after the first burn_in steps.
inline SafeSet asymptotic_safe_set(const GridRegion& region, const ControlledOrbit& orbit, std::size_t burn_in) {
  if (orbit.states.size() <= burn_in) throw std::invalid_argument("orbit is not longer than the burn-in");
  std::vector<std::uint8_t> mask(region.size(), 0);
  for (std::size_t n = burn_in; n < orbit.states.size(); ++n) {
    if (region.escapes(orbit.states[n])) break;
    mask[region.index_of(orbit.states[n])] = 1;
  }
  return make_safe_set(region, orbit.u0, std::move(mask));
}

/// First (member, sample) pair whose disturbed image has no member within
/// the set's threshold, if any. An empty result means the set is
/// controllable.
struct ControllabilityViolation {
  std::size_t point;
  std::size_t sample;
};

inline std::optional<ControllabilityViolation> find_uncontrollable(const SafeSet& set, const ImageTable& images,
                                                                   Metric metric) {
  ArrivalSearch search(set.region, metric);
  search.assign(set.indicator());
  const double t = membership_threshold(set.u0);
  for (std::size_t i = 0; i < set.mask.size(); ++i) {
    if (!set.mask[i]) continue;
    for (std::size_t s = 0; s < images.samples_per_point(); ++s)
      if (!search.cover(images.image(i, s), 0.0, t)) return ControllabilityViolation{i, s};
  }
  return std::nullopt;
}

inline bool is_controllable(const SafeSet& set, const ImageTable& images, Metric metric) {
  return !find_uncontrollable(set, images, metric).has_value();
}

}  // namespace partial_control
