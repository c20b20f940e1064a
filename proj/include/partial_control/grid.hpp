#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "state.hpp"

namespace partial_control {

/**
 * Rectangular region Q = [lower, upper] discretized into a regular grid that
 * includes both endpoints of every axis.
 *
 * Points are numbered with x varying fastest: i = ix + nx * iy.
 *
 * Coordinates are rounded to a power-of-two quantum (the ulp of the largest
 * bound) and the upper half of each axis is stored as the mirror image of the
 * lower half, so a grid symmetric about its center is symmetric bit for bit.
 */
class GridRegion {
 public:
  GridRegion() = default;

  GridRegion(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> points)
      : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points)) {
    const std::size_t dim = points_.size();
    if (dim < 1 || dim > 2) throw std::invalid_argument("grid dimension must be 1 or 2");
    if (lower_.size() != dim || upper_.size() != dim)
      throw std::invalid_argument("grid bounds do not match the number of axes");
    for (std::size_t d = 0; d < dim; ++d) {
      if (!(lower_[d] < upper_[d]))
        throw std::invalid_argument("grid axis " + std::to_string(d) + ": lower bound must be below upper bound");
      if (points_[d] < 2)
        throw std::invalid_argument("grid axis " + std::to_string(d) + ": at least 2 points required");
      build_axis(d);
    }
    size_ = points_[0] * (dim == 2 ? points_[1] : 1);
  }

  static GridRegion interval(double lo, double hi, std::size_t n) { return GridRegion({lo}, {hi}, {n}); }

  static GridRegion box(State lo, State hi, std::size_t nx, std::size_t ny) {
    return GridRegion({lo.x, lo.y}, {hi.x, hi.y}, {nx, ny});
  }

  int dimension() const { return static_cast<int>(points_.size()); }
  std::size_t size() const { return size_; }
  std::size_t points(int axis) const { return axis < dimension() ? points_[axis] : 1; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  State spacing() const { return {spacing_[0], dimension() == 2 ? spacing_[1] : 0.0}; }
  State lower_corner() const { return {lower_[0], dimension() == 2 ? lower_[1] : 0.0}; }
  State upper_corner() const { return {upper_[0], dimension() == 2 ? upper_[1] : 0.0}; }

  double coordinate(int axis, std::size_t k) const { return coords_[axis][k]; }

  std::array<std::size_t, 2> unravel(std::size_t i) const { return {i % points_[0], i / points_[0]}; }
  std::size_t ravel(std::size_t ix, std::size_t iy) const { return ix + points_[0] * iy; }

  /// Grid coordinate of point i.
  State point(std::size_t i) const {
    if (i >= size_)
      throw std::out_of_range("grid index " + std::to_string(i) + " out of range (N=" + std::to_string(size_) + ")");
    const auto [ix, iy] = unravel(i);
    return {coords_[0][ix], dimension() == 2 ? coords_[1][iy] : 0.0};
  }

  /// Index of the grid point nearest to q along one axis, clamped to the grid.
  std::size_t nearest_cell(int axis, double v) const {
    const double t = std::round((v - lower_[axis]) / spacing_[axis]);
    if (!(t > 0.0)) return 0;
    const auto last = points_[axis] - 1;
    return t >= static_cast<double>(last) ? last : static_cast<std::size_t>(t);
  }

  /// Index of the grid point nearest to q, which must lie in Q.
  std::size_t index_of(State q) const {
    if (escapes(q)) throw std::out_of_range("point lies outside the grid region");
    return ravel(nearest_cell(0, q.x), dimension() == 2 ? nearest_cell(1, q.y) : 0);
  }

  /// True iff q lies outside the closed box [lower, upper].
  bool escapes(State q) const {
    if (!(q.x >= lower_[0] && q.x <= upper_[0])) return true;
    if (dimension() == 2 && !(q.y >= lower_[1] && q.y <= upper_[1])) return true;
    return false;
  }

  friend bool operator==(const GridRegion& a, const GridRegion& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.points_ == b.points_;
  }

 private:
  void build_axis(std::size_t d) {
    const std::size_t n = points_[d];
    const double lo = lower_[d];
    const double hi = upper_[d];
    spacing_[d] = (hi - lo) / static_cast<double>(n - 1);
    int exponent = 0;
    std::frexp(std::max(std::fabs(lo), std::fabs(hi)), &exponent);
    const double quantum = std::ldexp(1.0, exponent - 53);
    auto snap = [quantum](double v) { return std::round(v / quantum) * quantum; };

    auto& c = coords_[d];
    c.assign(n, 0.0);
    const double lo_s = snap(lo);
    const double hi_s = snap(hi);
    for (std::size_t k = 0; k < (n + 1) / 2; ++k) c[k] = snap(lo + static_cast<double>(k) * spacing_[d]);
    for (std::size_t k = (n + 1) / 2; k < n; ++k) c[k] = (lo_s + hi_s) - c[n - 1 - k];
    c[0] = lo;
    c[n - 1] = hi;
  }

  std::vector<double> lower_, upper_;
  std::vector<std::size_t> points_;
  std::array<double, 2> spacing_{0.0, 0.0};
  std::array<std::vector<double>, 2> coords_;
  std::size_t size_ = 0;
};

}  // namespace partial_control
