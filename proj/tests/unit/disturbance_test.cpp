#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "partial_control/disturbance.hpp"

using namespace partial_control;

namespace {

bool has(const DisturbanceModel& m, State xi) { return std::find(m.samples.begin(), m.samples.end(), xi) != m.samples.end(); }

}  // namespace

TEST(Disturbance, ZeroBound) {
  for (Norm n : {Norm::euclidean, Norm::chebyshev}) {
    const auto m = build_sample_set(0.0, n, 2, 0.37);
    ASSERT_EQ(m.samples.size(), 1u);
    EXPECT_EQ(m.samples[0], State{});
    EXPECT_FALSE(m.degenerate);
  }
}

TEST(Disturbance, ThreeSamples1D) {
  const auto m = build_sample_set(0.05, Norm::euclidean, 1, 0.05);
  ASSERT_EQ(m.samples.size(), 3u);
  EXPECT_TRUE(has(m, {-0.05, 0}));
  EXPECT_TRUE(has(m, {0, 0}));
  EXPECT_TRUE(has(m, {0.05, 0}));
}

TEST(Disturbance, ThirteenSamples2D) {
  // Oracle: integer pairs with i^2 + j^2 <= 4.
  int expected = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) expected += i * i + j * j <= 4;
  ASSERT_EQ(expected, 13);
  const auto m = build_sample_set(0.2, Norm::euclidean, 2, 0.1);
  EXPECT_EQ(m.samples.size(), 13u);
  EXPECT_TRUE(has(m, {0.2, 0}));
  EXPECT_TRUE(has(m, {0, -0.2}));
}

TEST(Disturbance, ChebyshevSquare) {
  const auto m = build_sample_set(0.2, Norm::chebyshev, 2, 0.1);
  EXPECT_EQ(m.samples.size(), 25u);
}

TEST(Disturbance, Invariants) {
  for (Norm n : {Norm::euclidean, Norm::chebyshev})
    for (double xi0 : {0.0, 0.05, 0.2, 0.33})
      for (double h : {0.01, 0.016, 0.07}) {
        const auto m = build_sample_set(xi0, n, 2, h);
        const Metric metric = m.metric();
        EXPECT_TRUE(has(m, {0, 0}));
        for (const State& xi : m.samples) {
          EXPECT_LE(metric.length(xi), xi0 * (1 + 1e-12));
          EXPECT_TRUE(has(m, -xi));
        }
      }
}

TEST(Disturbance, OneDimensionalNormsAgree) {
  const auto a = build_sample_set(0.05, Norm::euclidean, 1, 0.001);
  const auto b = build_sample_set(0.05, Norm::chebyshev, 1, 0.001);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.samples.size(), 101u);
}

TEST(Disturbance, Degenerate) {
  const auto m = build_sample_set(0.05, Norm::euclidean, 1, 0.2);
  EXPECT_TRUE(m.degenerate);
  EXPECT_EQ(m.samples.size(), 1u);
}

TEST(Disturbance, Errors) {
  EXPECT_THROW(build_sample_set(-1.0, Norm::euclidean, 1, 0.1), std::invalid_argument);
  EXPECT_THROW(build_sample_set(0.1, Norm::euclidean, 1, 0.0), std::invalid_argument);
  EXPECT_THROW(build_sample_set(0.1, Norm::euclidean, 3, 0.1), std::invalid_argument);
}

TEST(Disturbance, DrawsStayInBall) {
  std::mt19937_64 rng(42);
  const auto m1 = build_sample_set(0.05, Norm::euclidean, 1, 0.01);
  for (int k = 0; k < 10000; ++k) {
    const State xi = draw_disturbance(m1, rng);
    ASSERT_LE(std::abs(xi.x), 0.05);
    ASSERT_EQ(xi.y, 0.0);
  }
  for (Norm n : {Norm::euclidean, Norm::chebyshev}) {
    const auto m2 = build_sample_set(0.2, n, 2, 0.05);
    for (int k = 0; k < 10000; ++k) ASSERT_LE(m2.metric().length(draw_disturbance(m2, rng)), 0.2);
  }
  const auto zero = build_sample_set(0.0, Norm::euclidean, 2, 0.05);
  EXPECT_EQ(draw_disturbance(zero, rng), State{});
}

TEST(Disturbance, DrawMean) {
  // Component std of a uniform disk of radius r is r/2, so 3 sigma of the
  // mean of 1e5 draws is 3 * 0.1 / sqrt(1e5) ~ 0.00095; 0.005 is generous.
  std::mt19937_64 rng(7);
  const auto m = build_sample_set(0.2, Norm::euclidean, 2, 0.05);
  double sx = 0, sy = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const State xi = draw_disturbance(m, rng);
    sx += xi.x;
    sy += xi.y;
  }
  EXPECT_NEAR(sx / n, 0.0, 0.005);
  EXPECT_NEAR(sy / n, 0.0, 0.005);
}

TEST(Disturbance, DrawFillsTheDisk) {
  // Uniform on a disk: P(|xi| <= r/2) = 1/4.
  std::mt19937_64 rng(11);
  const auto m = build_sample_set(0.2, Norm::euclidean, 2, 0.05);
  int inner = 0;
  const int n = 40000;
  for (int k = 0; k < n; ++k) inner += m.metric().length(draw_disturbance(m, rng)) <= 0.1;
  EXPECT_NEAR(inner / double(n), 0.25, 0.01);
}
