#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "state.hpp"

namespace partial_control {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

/// Result of an arrival search: the value min_j max(|image - q_j|, U_j) and
/// one grid index j attaining it.
struct Arrival {
  double value = kInfinity;
  std::size_t index = kNoIndex;
};

/// Reference implementation of the inner minimum: scans every grid point.
/// Ties go to the lowest index.
inline Arrival exhaustive_inner_min(State image, const std::vector<double>& values, const GridRegion& region,
                                    Metric metric) {
  Arrival best;
  for (std::size_t j = 0; j < region.size(); ++j) {
    const double v = std::max(metric.distance(image, region.point(j)), values[j]);
    if (v < best.value) best = {v, j};
  }
  return best;
}

/**
 * Branch-and-bound search for min_j max(|image - q_j|, U_j) over a grid.
 *
 * The field U is summarized by a min-pyramid (2x2 blocks per level). A block
 * can be skipped when max(min U over the block, distance to its bounding box)
 * already rules it out. Searches start from the finest level whose blocks
 * cover the disk that can still improve the incumbent, and visit children in
 * order of their lower bound.
 *
 * Results are bit-identical to exhaustive_inner_min: the bounds only discard
 * points whose computed value cannot win.
 *
 * All query methods are const and may run concurrently once assign() returns.
 */
class ArrivalSearch {
 public:
  ArrivalSearch(const GridRegion& region, Metric metric) : region_(&region), metric_(metric) {
    if (metric.dimension != region.dimension()) throw std::invalid_argument("metric and grid dimensions differ");
    nx0_ = static_cast<long>(region.points(0));
    ny0_ = static_cast<long>(region.points(1));
    for (int d = 0; d < region.dimension(); ++d) {
      coords_[d].resize(region.points(d));
      for (std::size_t k = 0; k < region.points(d); ++k) coords_[d][k] = region.coordinate(d, k);
    }
    if (region.dimension() == 1) coords_[1].assign(1, 0.0);
  }

  /// Replaces the field U and rebuilds the pyramid.
  void assign(const std::vector<double>& values) {
    if (values.size() != region_->size()) throw std::invalid_argument("value array does not match the grid");
    levels_.clear();
    nx_.clear();
    ny_.clear();
    levels_.push_back(values);
    nx_.push_back(nx0_);
    ny_.push_back(ny0_);
    while (nx_.back() > 1 || ny_.back() > 1) {
      const long px = nx_.back(), py = ny_.back();
      const long qx = (px + 1) / 2, qy = (py + 1) / 2;
      std::vector<double> up(static_cast<std::size_t>(qx * qy), kInfinity);
      const auto& lv = levels_.back();
      for (long y = 0; y < py; ++y) {
        const double* row = lv.data() + y * px;
        double* dst = up.data() + (y / 2) * qx;
        for (long x = 0; x < px; ++x) dst[x / 2] = std::min(dst[x / 2], row[x]);
      }
      levels_.push_back(std::move(up));
      nx_.push_back(qx);
      ny_.push_back(qy);
    }
  }

  const std::vector<double>& values() const { return levels_.front(); }
  const GridRegion& region() const { return *region_; }
  Metric metric() const { return metric_; }

  /// Exact min(incumbent, min_j max(|image - q_j|, U_j)). When nothing beats
  /// the incumbent the returned index is kNoIndex.
  Arrival inner_min(State image, double incumbent = kInfinity) const {
    Query q(*this, image, Mode::exact, 0.0, incumbent);
    q.nearest_grid_point();
    q.run(q.best.value);
    return q.best;
  }

  /// Like inner_min, but may stop as soon as some arrival with value <= floor
  /// is found. The value is exact whenever it exceeds floor.
  Arrival inner_min_above(State image, double floor) const {
    Query q(*this, image, Mode::exact, 0.0, kInfinity);
    q.floor = floor;
    q.nearest_grid_point();
    if (q.best.value > floor) q.run(q.best.value);
    return q.best;
  }

  /// Exact minimum with ties broken to the lowest grid index.
  Arrival inner_min_lowest(State image) const {
    Query q(*this, image, Mode::lowest, 0.0, kInfinity);
    q.nearest_grid_point();
    q.run(q.best.value);
    return q.best;
  }

  /// Some j with max(|center - q_j| + offset, U_j) <= bound, if any.
  std::optional<std::size_t> cover(State center, double offset, double bound) const {
    Query q(*this, center, Mode::decide, offset, bound);
    q.run(bound - offset);
    if (q.found) return q.best.index;
    return std::nullopt;
  }

  /// The same test for one given candidate j.
  bool admits(State center, double offset, double bound, std::size_t j) const {
    if (j == kNoIndex) return false;
    const long jx = static_cast<long>(j % nx0_), jy = static_cast<long>(j / nx0_);
    const double d = metric_.length(center.x - coords_[0][jx], center.y - coords_[1][jy]);
    return d + offset <= bound && levels_[0][j] <= bound;
  }

 private:
  enum class Mode { exact, lowest, decide };

  struct Query {
    const ArrivalSearch& s;
    State p;
    Mode mode;
    double offset;
    double floor = -kInfinity;
    Arrival best;
    bool found = false;

    Query(const ArrivalSearch& search, State image, Mode m, double off, double bound)
        : s(search), p(image), mode(m), offset(off) {
      best.value = bound;
    }

    bool done() const { return found; }

    // Whether a lower bound rules a block out.
    bool prune(double lb) const { return mode == Mode::exact ? lb >= best.value : lb > best.value; }

    void consider(long x, long y) {
      const std::size_t j = static_cast<std::size_t>(y * s.nx0_ + x);
      const double u = s.levels_[0][j];
      if (prune(u)) return;
      const double v = std::max(s.metric_.length(p.x - s.coords_[0][x], p.y - s.coords_[1][y]) + offset, u);
      switch (mode) {
        case Mode::exact:
          if (v < best.value) {
            best = {v, j};
            if (v <= floor) found = true;
          }
          break;
        case Mode::lowest:
          if (v < best.value || (v == best.value && j < best.index)) best = {v, j};
          break;
        case Mode::decide:
          if (v <= best.value) {
            best.index = j;
            found = true;
          }
          break;
      }
    }

    void nearest_grid_point() {
      const long x = static_cast<long>(s.region_->nearest_cell(0, p.x));
      const long y = s.region_->dimension() == 2 ? static_cast<long>(s.region_->nearest_cell(1, p.y)) : 0;
      consider(x, y);
    }

    // Lower bound for block (x, y) of level L, or +inf if empty.
    double block_bound(int L, long x, long y) const {
      const double m = s.levels_[L][static_cast<std::size_t>(y * s.nx_[L] + x)];
      const long x0 = x << L, x1 = std::min(((x + 1) << L) - 1, s.nx0_ - 1);
      const double cx = std::clamp(p.x, s.coords_[0][x0], s.coords_[0][x1]);
      double dy = 0.0;
      if (s.ny0_ > 1) {
        const long y0 = y << L, y1 = std::min(((y + 1) << L) - 1, s.ny0_ - 1);
        dy = p.y - std::clamp(p.y, s.coords_[1][y0], s.coords_[1][y1]);
      }
      return std::max(m, s.metric_.length(p.x - cx, dy) + offset);
    }

    template <std::size_t K>
    void visit(int L, const long (&xs)[K], const long (&ys)[K], std::size_t n) {
      double lb[K];
      std::size_t order[K];
      std::size_t k = 0;
      for (std::size_t a = 0; a < n; ++a) {
        const double l = block_bound(L, xs[a], ys[a]);
        if (prune(l)) continue;
        std::size_t b = k++;
        for (; b > 0 && l < lb[b - 1]; --b) {
          lb[b] = lb[b - 1];
          order[b] = order[b - 1];
        }
        lb[b] = l;
        order[b] = a;
      }
      for (std::size_t a = 0; a < k; ++a) {
        if (done() || prune(lb[a])) return;
        descend(L, xs[order[a]], ys[order[a]]);
      }
    }

    void descend(int L, long x, long y) {
      if (L == 0) {
        consider(x, y);
        return;
      }
      const int c = L - 1;
      long xs[4], ys[4];
      std::size_t n = 0;
      for (long oy = 0; oy < 2; ++oy) {
        const long cy = 2 * y + oy;
        if (cy >= s.ny_[c]) break;
        for (long ox = 0; ox < 2; ++ox) {
          const long cx = 2 * x + ox;
          if (cx >= s.nx_[c]) break;
          xs[n] = cx;
          ys[n] = cy;
          ++n;
        }
      }
      visit(c, xs, ys, n);
    }

    // Index range of grid points within `radius` of p along one axis.
    static bool axis_range(double lo, double h, long n, double v, double radius, long& a, long& b) {
      if (!(radius < kInfinity)) {
        a = 0;
        b = n - 1;
        return true;
      }
      const double fa = std::ceil((v - radius - lo) / h - 1e-9);
      const double fb = std::floor((v + radius - lo) / h + 1e-9);
      if (!(fa <= static_cast<double>(n - 1)) || !(fb >= 0.0)) return false;
      a = fa > 0.0 ? static_cast<long>(fa) : 0;
      b = fb < static_cast<double>(n - 1) ? static_cast<long>(fb) : n - 1;
      return a <= b;
    }

    // Searches all grid points within `radius` of p.
    void run(double radius) {
      if (done() || !(radius >= 0.0)) return;
      const GridRegion& g = *s.region_;
      long x0, x1, y0 = 0, y1 = 0;
      if (!axis_range(g.lower(0), g.spacing(0), s.nx0_, p.x, radius, x0, x1)) return;
      if (g.dimension() == 2 && !axis_range(g.lower(1), g.spacing(1), s.ny0_, p.y, radius, y0, y1))
        return;
      int L = 0;
      const int top = static_cast<int>(s.levels_.size()) - 1;
      while (L < top && ((x1 >> L) - (x0 >> L) >= 2 || (y1 >> L) - (y0 >> L) >= 2)) ++L;
      long xs[9], ys[9];
      std::size_t n = 0;
      for (long y = y0 >> L; y <= (y1 >> L); ++y)
        for (long x = x0 >> L; x <= (x1 >> L); ++x) {
          xs[n] = x;
          ys[n] = y;
          ++n;
        }
      visit(L, xs, ys, n);
    }
  };

  const GridRegion* region_;
  Metric metric_;
  long nx0_ = 0, ny0_ = 1;
  std::vector<double> coords_[2];
  std::vector<std::vector<double>> levels_;
  std::vector<long> nx_, ny_;
};

}  // namespace partial_control
