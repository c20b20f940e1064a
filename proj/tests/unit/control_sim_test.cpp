#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "partial_control/control_sim.hpp"

using namespace partial_control;

namespace {

const Metric kLine{Norm::euclidean, 1};

SafeSet two_point_set() {
  const auto g = GridRegion::interval(0, 1, 11);
  std::vector<std::uint8_t> mask(11, 0);
  mask[3] = mask[7] = 1;
  return make_safe_set(g, 0.25, mask);
}

struct TentSetup {
  GridRegion g = GridRegion::interval(0, 1, 1001);
  DisturbanceModel model = build_sample_set(0.05, Norm::euclidean, 1, g.spacing());
  SafetyFunction u;
  SafeSet safe;
  TentSetup() {
    SolverOptions o;
    o.workers = 1;
    u = compute_safety_function(tent_map(), g, model, 1000, o);
    safe = minimum_safe_set(u);
  }
};

const TentSetup& tent() {
  static const TentSetup setup;
  return setup;
}

}  // namespace

TEST(ControlStep, AlreadySafe) {
  const auto s = two_point_set();
  const auto c = control_step(s.region.point(3), s, kLine);
  EXPECT_EQ(c.next, s.region.point(3));
  EXPECT_EQ(c.control, State{});
}

TEST(ControlStep, Nearest) {
  const auto s = two_point_set();
  const auto c = control_step({0.55, 0}, s, kLine);
  EXPECT_EQ(c.index, 7u);
  EXPECT_NEAR(c.control.x, 0.15, 1e-15);
  EXPECT_EQ(0.55 + c.control.x, c.next.x);
}

TEST(ControlStep, TieGoesToLowestIndex) {
  const auto s = two_point_set();
  const auto c = control_step({0.5, 0}, s, kLine);
  EXPECT_EQ(c.index, 3u);
  EXPECT_NEAR(c.control.x, -0.2, 1e-15);
}

TEST(ControlStep, ExactOffset) {
  // Images within a control bound of a grid target share its quantum.
  const auto g = GridRegion::box({-4, -4}, {4, 4}, 1000, 1000);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> delta(-0.3, 0.3);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  for (int k = 0; k < 10000; ++k) {
    const double b = g.point(pick(rng)).x;
    const double a = b + delta(rng);
    ASSERT_EQ(a + exact_offset(a, b), b) << a << " " << b;
  }
  EXPECT_THROW(exact_offset(3.999, 0.30000000000000004), std::logic_error);
}

TEST(ControlledOrbit, ZeroSteps) {
  const auto& t = tent();
  const State start = t.g.point(t.safe.members().front());
  const auto o = run_controlled(tent_map(), t.safe, t.model, start, 0, 1);
  ASSERT_EQ(o.states.size(), 1u);
  EXPECT_TRUE(o.controls.empty());
  EXPECT_FALSE(o.escaped_at);
}

TEST(ControlledOrbit, TentContract) {
  const auto& t = tent();
  const State start = t.g.point(t.safe.members().front());
  const auto o = run_controlled(tent_map(), t.safe, t.model, start, 10000, 2);
  ASSERT_EQ(o.states.size(), 10001u);
  const Metric m = t.model.metric();
  const auto f = tent_map();
  for (std::size_t n = 0; n < o.steps(); ++n) {
    ASSERT_EQ((f(o.states[n]) + o.disturbances[n]) + o.controls[n], o.states[n + 1]) << n;
    ASSERT_LE(m.length(o.disturbances[n]), t.model.bound);
    ASSERT_LE(o.control_norms[n], membership_threshold(t.safe.u0));
    ASSERT_TRUE(t.safe.contains(t.g.index_of(o.states[n + 1])));
    ASSERT_EQ(t.g.point(t.g.index_of(o.states[n + 1])), o.states[n + 1]);
  }
  EXPECT_LT(o.max_control_norm(), t.model.bound);
}

TEST(ControlledOrbit, Deterministic) {
  const auto& t = tent();
  const State start = t.g.point(t.safe.members().back());
  const auto a = run_controlled(tent_map(), t.safe, t.model, start, 500, 77);
  const auto b = run_controlled(tent_map(), t.safe, t.model, start, 500, 77);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.controls, b.controls);
  const auto c = run_controlled(tent_map(), t.safe, t.model, start, 500, 78);
  EXPECT_NE(a.states, c.states);
}

TEST(ControlledOrbit, StartMustBeSafe) {
  const auto& t = tent();
  std::size_t outside = 0;
  while (t.safe.contains(outside)) ++outside;
  EXPECT_THROW(run_controlled(tent_map(), t.safe, t.model, t.g.point(outside), 10, 1), std::invalid_argument);
  EXPECT_THROW(run_controlled(tent_map(), t.safe, t.model, {1.5, 0}, 10, 1), std::invalid_argument);
}

TEST(UncontrolledOrbit, StartOutside) {
  const auto g = GridRegion::interval(0, 1, 11);
  const auto model = build_sample_set(0.05, Norm::euclidean, 1, 0.1);
  const auto o = run_uncontrolled(tent_map(), g, model, {1.5, 0}, 100, 1);
  ASSERT_TRUE(o.escaped_at);
  EXPECT_EQ(*o.escaped_at, 0u);
}

TEST(UncontrolledOrbit, TentEscapesQuickly) {
  const auto g = GridRegion::interval(0, 1, 11);
  const auto model = build_sample_set(0.05, Norm::euclidean, 1, 0.1);
  std::vector<std::size_t> times;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto o = run_uncontrolled(tent_map(), g, model, {0.3, 0}, 100000, seed);
    ASSERT_TRUE(o.escaped_at) << seed;
    ASSERT_TRUE(g.escapes(o.states.back()));
    ASSERT_EQ(o.states.size(), *o.escaped_at + 1);
    times.push_back(*o.escaped_at);
  }
  std::nth_element(times.begin(), times.begin() + 50, times.end());
  EXPECT_LT(times[50], 30u);
}

TEST(UncontrolledOrbit, Reconstruction) {
  const auto g = GridRegion::box({-4, -4}, {4, 4}, 11, 11);
  const auto model = build_sample_set(0.2, Norm::euclidean, 2, 0.1);
  const auto f = henon_map();
  const auto o = run_uncontrolled(f, g, model, {0.1, 0.1}, 1000, 3);
  for (std::size_t n = 0; n < o.steps(); ++n) ASSERT_EQ((f(o.states[n]) + o.disturbances[n]) + o.controls[n], o.states[n + 1]);
}

TEST(Draw, LatticeDrawsAreSamples) {
  const auto model = build_sample_set(0.2, Norm::euclidean, 2, 0.03);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 2000; ++k) {
    const State xi = draw(model, DisturbanceDraw::lattice, rng);
    ASSERT_NE(std::find(model.samples.begin(), model.samples.end(), xi), model.samples.end());
  }
}

TEST(Census, DeterministicAcrossWorkers) {
  const auto g = GridRegion::box({-4, -4}, {4, 4}, 11, 11);
  const auto model = build_sample_set(0.2, Norm::euclidean, 2, 0.1);
  const auto a = escape_census(henon_map(), g, model, 200, 1000, 10, 1);
  const auto b = escape_census(henon_map(), g, model, 200, 1000, 10, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a[r].seed, b[r].seed);
    EXPECT_EQ(a[r].escaped_at, b[r].escaped_at);
  }
}
