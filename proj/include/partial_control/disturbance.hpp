#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "state.hpp"

namespace partial_control {

/// Relative slack used when deciding whether a lattice point lies in the
/// closed disturbance ball; absorbs rounding for points exactly on the sphere.
inline constexpr double kBallTolerance = 1e-12;

/// Bounded disturbance: the closed ball of radius `bound` under `norm`, with
/// the finite sample set the solver maximizes over.
struct DisturbanceModel {
  double bound = 0.0;
  Norm norm = Norm::euclidean;
  int dimension = 1;
  std::vector<State> samples{State{}};
  /// Set when the lattice spacing is too coarse to place any sample besides 0
  /// inside a non-trivial ball.
  bool degenerate = false;

  Metric metric() const { return {norm, dimension}; }
  bool contains(State xi) const { return metric().length(xi) <= bound * (1.0 + kBallTolerance); }
};

/// All points of the lattice spacing * Z^d that lie in the closed ball of
/// radius `bound`, in raster order (y outer, x inner). Always contains 0 and
/// is symmetric under negation.
inline DisturbanceModel build_sample_set(double bound, Norm norm, int dimension, State spacing) {
  if (!(bound >= 0.0)) throw std::invalid_argument("disturbance bound must be nonnegative");
  if (dimension != 1 && dimension != 2) throw std::invalid_argument("disturbance dimension must be 1 or 2");
  if (!(spacing.x > 0.0) || (dimension == 2 && !(spacing.y > 0.0)))
    throw std::invalid_argument("disturbance sample spacing must be positive");

  DisturbanceModel model;
  model.bound = bound;
  model.norm = norm;
  model.dimension = dimension;
  model.samples.clear();

  const long kx = static_cast<long>(std::floor(bound / spacing.x)) + 1;
  const long ky = dimension == 2 ? static_cast<long>(std::floor(bound / spacing.y)) + 1 : 0;
  for (long j = -ky; j <= ky; ++j) {
    for (long i = -kx; i <= kx; ++i) {
      State xi{static_cast<double>(i) * spacing.x, dimension == 2 ? static_cast<double>(j) * spacing.y : 0.0};
      if (model.contains(xi)) model.samples.push_back(xi);
    }
  }
  model.degenerate = bound > 0.0 && model.samples.size() == 1;
  return model;
}

inline DisturbanceModel build_sample_set(double bound, Norm norm, int dimension, double spacing) {
  return build_sample_set(bound, norm, dimension, State{spacing, spacing});
}

/// Uniform draw from the continuous closed ball, by rejection from the
/// bounding box.
template <class Rng>
State draw_disturbance(const DisturbanceModel& model, Rng& rng) {
  if (model.bound == 0.0) return {};
  std::uniform_real_distribution<double> u(-model.bound, model.bound);
  const Metric m = model.metric();
  for (;;) {
    State xi{u(rng), model.dimension == 2 ? u(rng) : 0.0};
    if (m.length(xi) <= model.bound) return xi;
  }
}

}  // namespace partial_control
