#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace partial_control {

/// A point of the phase space. One-dimensional systems only use `x`; `y`
/// stays zero so that 1D and 2D states share the same arithmetic.
struct State {
  double x = 0.0;
  double y = 0.0;

  friend constexpr State operator+(State a, State b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr State operator-(State a, State b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr State operator-(State a) { return {-a.x, -a.y}; }
  friend constexpr bool operator==(State a, State b) = default;
};

enum class Norm { euclidean, chebyshev };

inline std::string_view to_string(Norm n) {
  return n == Norm::euclidean ? "euclidean" : "chebyshev";
}

inline Norm parse_norm(std::string_view s) {
  if (s == "euclidean") return Norm::euclidean;
  if (s == "chebyshev") return Norm::chebyshev;
  throw std::invalid_argument("unknown norm '" + std::string(s) + "' (expected euclidean or chebyshev)");
}

/// Vector length under a norm in 1 or 2 dimensions. In 1D both norms reduce
/// to the absolute value, computed as such so that they agree bit for bit.
struct Metric {
  Norm norm = Norm::euclidean;
  int dimension = 2;

  double length(double dx, double dy) const {
    if (dimension == 1) return std::fabs(dx);
    if (norm == Norm::chebyshev) return std::max(std::fabs(dx), std::fabs(dy));
    return std::sqrt(dx * dx + dy * dy);
  }
  double length(State v) const { return length(v.x, v.y); }
  double distance(State a, State b) const { return length(a.x - b.x, a.y - b.y); }
};

}  // namespace partial_control
