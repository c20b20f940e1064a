#include <gtest/gtest.h>

#include <random>

#include "partial_control/control_sim.hpp"
#include "partial_control/maps.hpp"

using namespace partial_control;

TEST(Maps, Tent) {
  EXPECT_DOUBLE_EQ(tent_apply(0.3, 3), 0.9);
  EXPECT_DOUBLE_EQ(tent_apply(0.5, 3), 1.5);
  EXPECT_DOUBLE_EQ(tent_apply(0.6, 3), 1.2);
}

TEST(Maps, Henon) {
  EXPECT_EQ(henon_apply({0, 0}, 6, 0.4), (State{6, 0}));
  const State a = henon_apply({1, 1}, 6, 0.4);
  EXPECT_DOUBLE_EQ(a.x, 4.6);
  EXPECT_EQ(a.y, 1.0);
  const State b = henon_apply({-2, 3}, 6, 0.4);
  EXPECT_NEAR(b.x, 0.8, 1e-15);
  EXPECT_EQ(b.y, -2.0);
}

TEST(Maps, Lozi) {
  EXPECT_EQ(lozi_apply({0, 0}, 2, 0.5), (State{1, 0}));
  EXPECT_EQ(lozi_apply({-1, 2}, 2, 0.5), (State{0, -1}));
  EXPECT_EQ(lozi_apply({0.5, 0}, 2, 0.5), (State{0, 0.5}));
}

TEST(Maps, TentSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> k(0, 1 << 20);
  for (int t = 0; t < 1000; ++t) {
    // Dyadic inputs keep 1 - x exact.
    const double x = k(rng) / double(1 << 20);
    ASSERT_EQ(tent_apply(x, 3.0), tent_apply(1.0 - x, 3.0)) << x;
  }
}

TEST(Maps, SecondComponentCopiesX) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int t = 0; t < 1000; ++t) {
    const State q{u(rng), u(rng)};
    ASSERT_EQ(henon_apply(q, 6, 0.4).y, q.x);
    ASSERT_EQ(lozi_apply(q, 2, 0.5).y, q.x);
  }
}

TEST(Maps, Deterministic) {
  const auto m = henon_map();
  const State q{0.123456789, -1.987654321};
  EXPECT_EQ(m(q), m(q));
}

TEST(Maps, Factory) {
  const auto t = make_map("tent", {{"mu", 2.5}});
  EXPECT_EQ(t.dimension(), 1);
  EXPECT_EQ(t.parameter("mu"), 2.5);
  EXPECT_EQ(make_map("henon", {}).parameter("a"), 6.0);
  EXPECT_EQ(make_map("lozi", {}).parameter("b"), 0.5);
  EXPECT_EQ(make_map("identity", {}, 2).dimension(), 2);
  EXPECT_THROW(make_map("logistic", {}), std::invalid_argument);
  EXPECT_THROW(make_map("tent", {{"a", 1.0}}), std::invalid_argument);
}

// Uncontrolled escape at the reference disturbance bounds.
TEST(Maps, UncontrolledOrbitsEscape) {
  struct Case {
    MapSystem map;
    GridRegion region;
    double xi0;
  };
  const Case cases[] = {
      {tent_map(), GridRegion::interval(0, 1, 11), 0.05},
      {henon_map(), GridRegion::box({-4, -4}, {4, 4}, 11, 11), 0.2},
      {lozi_map(), GridRegion::box({-4, -4}, {4, 4}, 11, 11), 0.05},
  };
  for (const auto& c : cases) {
    const auto model = build_sample_set(c.xi0, Norm::euclidean, c.region.dimension(), 0.01);
    const auto census = escape_census(c.map, c.region, model, 1000, 1000, 1, 1);
    EXPECT_GE(escape_fraction(census), 0.95) << c.map.name();
  }
}
