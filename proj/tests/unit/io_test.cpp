#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "partial_control/io/csv.hpp"
#include "partial_control/io/pgm.hpp"

using namespace partial_control;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "partial_control_io_test" / name;
  fs::create_directories(p);
  return p;
}

SafetyFunction henon_small() {
  const auto g = GridRegion::box({-4, -4}, {4, 4}, 23, 17);
  const auto model = build_sample_set(0.5, Norm::euclidean, 2, g.spacing());
  return compute_safety_function(henon_map(), g, model);
}

}  // namespace

TEST(Csv, DoubleRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> exp10(-300, 300);
  for (int k = 0; k < 10000; ++k) {
    const double v = std::pow(10.0, exp10(rng)) * (k % 2 ? -1 : 1);
    ASSERT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::parse_double("inf"), kInfinity);
  EXPECT_THROW(io::parse_double("0.1x"), std::runtime_error);
  EXPECT_THROW(io::parse_double(""), std::runtime_error);
}

TEST(Csv, SafetyRoundTrip) {
  const auto u = henon_small();
  const fs::path dir = scratch("safety");
  io::write_safety_csv(dir / "safety.csv", u);
  io::write_key_values(dir / "meta.csv", io::safety_metadata(u));
  EXPECT_EQ(io::read_safety_values(dir / "safety.csv"), u.values);
  const auto meta = io::read_key_values(dir / "meta.csv");
  EXPECT_EQ(io::region_from_metadata(meta), u.region);
  EXPECT_EQ(meta.at("sweeps"), std::to_string(u.sweeps));
  EXPECT_EQ(io::parse_double(meta.at("min_value")), u.min_value);

  const io::Table t = io::read_csv(dir / "safety.csv");
  EXPECT_EQ(t.header, (io::Row{"index", "x", "y", "U"}));
  ASSERT_EQ(t.rows.size(), u.region.size());
  for (std::size_t i = 0; i < t.rows.size(); i += 37) {
    EXPECT_EQ(io::parse_double(t.rows[i][1]), u.region.point(i).x);
    EXPECT_EQ(io::parse_double(t.rows[i][2]), u.region.point(i).y);
  }
}

TEST(Csv, SafeSetRoundTrip) {
  const auto u = henon_small();
  const auto s = extract_safe_set(u, u.min_value + 0.1);
  const fs::path p = scratch("set") / "safeset.csv";
  io::write_safe_set_csv(p, s);
  const auto back = io::read_safe_set_csv(p, u.region, s.u0);
  EXPECT_EQ(back.mask, s.mask);
  EXPECT_EQ(back.member_count, s.member_count);
}

TEST(Csv, OrbitRoundTrip) {
  const auto g = GridRegion::interval(0, 1, 1001);
  const auto model = build_sample_set(0.05, Norm::euclidean, 1, g.spacing());
  const auto u = compute_safety_function(tent_map(), g, model);
  const auto set = minimum_safe_set(u);
  const auto orbit = run_controlled(tent_map(), set, model, g.point(set.members().front()), 300, 4);
  const fs::path p = scratch("orbit") / "orbit.csv";
  io::write_orbit_csv(p, orbit, 1);
  const auto back = io::read_orbit_csv(p);
  EXPECT_EQ(back.states, orbit.states);
  EXPECT_EQ(back.disturbances, orbit.disturbances);
  EXPECT_EQ(back.controls, orbit.controls);
  EXPECT_EQ(back.control_norms, orbit.control_norms);
  const io::Table t = io::read_csv(p);
  EXPECT_EQ(t.header, (io::Row{"step", "x", "xi_x", "u_x", "u_norm"}));
  EXPECT_EQ(t.rows.back().size(), 5u);
  EXPECT_TRUE(t.rows.back()[4].empty());
}

TEST(Csv, EscapesRoundTrip) {
  const std::vector<EscapeRecord> census{{1, 7}, {2, std::nullopt}, {3, 0}};
  const fs::path p = scratch("escapes") / "escapes.csv";
  io::write_escapes_csv(p, census);
  const auto back = io::read_escapes_csv(p);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].seed, census[k].seed);
    EXPECT_EQ(back[k].escaped_at, census[k].escaped_at);
  }
}

TEST(Csv, MissingColumnAndFile) {
  const fs::path p = scratch("bad") / "t.csv";
  io::write_key_values(p, {{"a", "1"}});
  EXPECT_THROW(io::read_csv(p).column("U"), std::runtime_error);
  EXPECT_THROW(io::read_csv(scratch("bad") / "none.csv"), std::runtime_error);
}

TEST(Pgm, HeatmapPixels) {
  const auto u = henon_small();
  const auto img = io::heatmap_image(u);
  ASSERT_EQ(img.width, 23u);
  ASSERT_EQ(img.height, 17u);
  double lo = kInfinity, hi = -kInfinity;
  for (double v : u.values) {
    lo = std::min(lo, std::log10(v + 1e-12));
    hi = std::max(hi, std::log10(v + 1e-12));
  }
  for (std::size_t iy = 0; iy < 17; ++iy)
    for (std::size_t ix = 0; ix < 23; ++ix) {
      const double v = u.values[ix + 23 * iy];
      const long expected = std::lround(255.0 * (std::log10(v + 1e-12) - lo) / (hi - lo));
      // Bottom grid row is the last image row.
      ASSERT_EQ(img.at(ix, 16 - iy), expected) << ix << " " << iy;
    }
}

TEST(Pgm, MaskAlignedWithGrid) {
  const auto u = henon_small();
  const auto s = minimum_safe_set(u);
  const auto img = io::mask_image(s);
  for (std::size_t i = 0; i < s.mask.size(); ++i) {
    const std::size_t ix = i % 23, iy = i / 23;
    ASSERT_EQ(img.at(ix, 16 - iy), s.contains(i) ? 0 : 255);
  }
}

TEST(Pgm, RoundTrip) {
  const auto img = io::heatmap_image(henon_small());
  const fs::path p = scratch("pgm") / "heat.pgm";
  io::write_pgm(p, img);
  const auto back = io::read_pgm(p);
  EXPECT_EQ(back.width, img.width);
  EXPECT_EQ(back.height, img.height);
  EXPECT_EQ(back.pixels, img.pixels);
  EXPECT_EQ(fs::file_size(p), 13 + img.pixels.size());
}

TEST(Pgm, OneDimensionalIsOneRow) {
  const auto g = GridRegion::interval(0, 1, 101);
  const auto u = compute_safety_function(tent_map(), g, build_sample_set(0.05, Norm::euclidean, 1, g.spacing()));
  const auto img = io::heatmap_image(u);
  EXPECT_EQ(img.width, 101u);
  EXPECT_EQ(img.height, 1u);
}
