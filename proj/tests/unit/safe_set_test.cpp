#include <gtest/gtest.h>

#include <random>

#include "partial_control/control_sim.hpp"
#include "partial_control/safe_set.hpp"

using namespace partial_control;

namespace {

SafeSet mask_set(const GridRegion& g, std::vector<std::uint8_t> mask) { return make_safe_set(g, 0.0, std::move(mask)); }

SafetyFunction solve(const MapSystem& f, const GridRegion& g, const DisturbanceModel& model) {
  SolverOptions o;
  o.workers = 1;
  return compute_safety_function(f, g, model, 1000, o);
}

}  // namespace

TEST(SafeSet, ExtractBounds) {
  const auto g = GridRegion::interval(0, 1, 201);
  const auto model = build_sample_set(0.05, Norm::euclidean, 1, g.spacing());
  const auto u = solve(tent_map(), g, model);
  EXPECT_EQ(extract_safe_set(u, kInfinity).member_count, g.size());
  EXPECT_THROW(extract_safe_set(u, u.min_value * 0.99), NoSafeSetError);
  const auto s = minimum_safe_set(u);
  EXPECT_GE(s.member_count, u.argmin.size());
  for (std::size_t i : u.argmin) EXPECT_TRUE(s.contains(i));
}

TEST(SafeSet, ExtractRequiresConvergence) {
  const auto g = GridRegion::interval(0, 1, 201);
  const auto model = build_sample_set(0.05, Norm::euclidean, 1, g.spacing());
  const auto u = compute_safety_function(tent_map(), g, model, 1);
  EXPECT_THROW(extract_safe_set(u, 1.0), std::invalid_argument);
}

TEST(SafeSet, MonotoneInBound) {
  const auto g = GridRegion::box({-4, -4}, {4, 4}, 50, 50);
  const auto model = build_sample_set(0.2, Norm::euclidean, 2, g.spacing());
  const auto u = solve(henon_map(), g, model);
  const double h = g.spacing(0);
  SafeSet prev = minimum_safe_set(u);
  for (double k : {0.5, 1.0, 2.0, 5.0}) {
    const SafeSet next = extract_safe_set(u, u.min_value + k * h);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_TRUE(!prev.contains(i) || next.contains(i));
    EXPECT_GE(next.member_count, prev.member_count);
    prev = next;
  }
}

TEST(Sculpt, IdentityKeepsEverything) {
  const auto g = GridRegion::interval(0, 1, 3);
  const auto model = build_sample_set(0.0, Norm::euclidean, 1, 0.5);
  for (double u0 : {0.0, 0.1, 1.0}) EXPECT_EQ(sculpt_safe_set(identity_map(1), g, model, u0).member_count, 3u);
}

TEST(Sculpt, ShiftToy) {
  const auto g = GridRegion::interval(0, 1, 3);
  const auto model = build_sample_set(0.0, Norm::euclidean, 1, 0.5);
  const auto f = shift_map(1, 0.2);
  EXPECT_TRUE(sculpt_safe_set(f, g, model, 0.19).empty());
  EXPECT_EQ(sculpt_safe_set(f, g, model, 0.2).member_count, 3u);
}

// Sculpting and the sublevel sets of U are the same object on the same grid.
TEST(Sculpt, EqualsExtraction) {
  struct Case {
    MapSystem f;
    GridRegion g;
    double xi0;
    Norm norm;
  };
  const Case cases[] = {
      {tent_map(), GridRegion::interval(0, 1, 201), 0.05, Norm::euclidean},
      {tent_map(2.7), GridRegion::interval(0, 1, 151), 0.04, Norm::euclidean},
      {henon_map(), GridRegion::box({-4, -4}, {4, 4}, 61, 61), 0.2, Norm::euclidean},
      {lozi_map(), GridRegion::box({-4, -4}, {4, 4}, 61, 61), 0.15, Norm::euclidean},
      {henon_map(5.0, 0.3), GridRegion::box({-4, -4}, {4, 4}, 41, 41), 0.3, Norm::chebyshev},
  };
  for (const auto& c : cases) {
    const auto model = build_sample_set(c.xi0, c.norm, c.g.dimension(), c.g.spacing());
    const auto u = solve(c.f, c.g, model);
    const auto images = image_table(c.f, c.g, model);
    for (double u0 : {u.min_value, u.min_value + c.g.spacing(0), 2 * c.xi0}) {
      if (u0 < u.min_value) continue;
      const SafeSet a = extract_safe_set(u, u0);
      const SafeSet b = sculpt_safe_set(c.f, c.g, model, u0);
      ASSERT_EQ(a.mask, b.mask) << c.f.name() << " u0=" << u0;
      EXPECT_TRUE(is_controllable(a, images, model.metric())) << c.f.name();
    }
    // Just below the minimum nothing survives (beyond the extraction tolerance).
    ASSERT_GT(u.min_value, 1e-6) << c.f.name();
    EXPECT_TRUE(sculpt_safe_set(c.f, c.g, model, u.min_value * (1 - 1e-6)).empty()) << c.f.name();
  }
}

TEST(Components, Runs1D) {
  const auto g = GridRegion::interval(0, 1, 10);
  EXPECT_EQ(count_components(mask_set(g, {1, 1, 0, 1, 0, 0, 1, 1, 1, 0})), 3u);
  EXPECT_EQ(count_components(mask_set(g, std::vector<std::uint8_t>(10, 1))), 1u);
  EXPECT_THROW(count_components(mask_set(g, std::vector<std::uint8_t>(10, 0))), NoSafeSetError);
}

TEST(Components, EightNeighbour2D) {
  const auto g = GridRegion::box({0, 0}, {1, 1}, 4, 4);
  // Rows listed bottom (iy = 0) to top.
  EXPECT_EQ(count_components(mask_set(g, {1, 0, 0, 0,  //
                                          0, 1, 0, 0,  //
                                          0, 0, 1, 0,  //
                                          0, 0, 0, 1})),
            1u);
  EXPECT_EQ(count_components(mask_set(g, {1, 0, 0, 1,  //
                                          1, 0, 0, 1,  //
                                          0, 0, 0, 0,  //
                                          1, 1, 0, 1})),
            4u);
  EXPECT_EQ(count_components(mask_set(g, std::vector<std::uint8_t>(16, 1))), 1u);
}

TEST(Components, TentMinimumSafeSet) {
  const auto g = GridRegion::interval(0, 1, 1001);
  const auto u = solve(tent_map(), g, build_sample_set(0.05, Norm::euclidean, 1, g.spacing()));
  EXPECT_EQ(count_components(minimum_safe_set(u)), 8u);
}

TEST(Asymptotic, SingletonOrbit) {
  const auto g = GridRegion::interval(0, 1, 11);
  ControlledOrbit o;
  o.states.assign(20, g.point(4));
  const SafeSet s = asymptotic_safe_set(g, o, 5);
  EXPECT_EQ(s.member_count, 1u);
  EXPECT_TRUE(s.contains(4));
  EXPECT_THROW(asymptotic_safe_set(g, o, 20), std::invalid_argument);
}

TEST(Asymptotic, TentOrbitStaysInMinimumSafeSet) {
  const auto g = GridRegion::interval(0, 1, 1001);
  const auto model = build_sample_set(0.05, Norm::euclidean, 1, g.spacing());
  const auto u = solve(tent_map(), g, model);
  const SafeSet safe = minimum_safe_set(u);
  const auto orbit = run_controlled(tent_map(), safe, model, g.point(safe.members().front()), 10000, 9);
  const SafeSet a = asymptotic_safe_set(g, orbit, 100);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_TRUE(!a.contains(i) || safe.contains(i));
}
