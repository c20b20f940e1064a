#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../safe_set.hpp"
#include "../safety_solver.hpp"
#include "csv.hpp"

namespace partial_control::io {

/// 8-bit grayscale image, row-major with row 0 at the top.
struct GrayImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t row) const { return pixels[row * width + x]; }
};

inline constexpr double kLogEpsilon = 1e-12;

/// pixel = round(255 * (log10(U + eps) - lo) / (hi - lo)), with lo and hi the
/// extremes of log10(U + eps) over the grid. Pixel column ix is grid column ix;
/// the top row is the highest y.
inline GrayImage heatmap_image(const SafetyFunction& u) {
  const GridRegion& g = u.region;
  GrayImage img{g.points(0), g.points(1), {}};
  std::vector<double> logs(u.values.size());
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log10(u.values[i] + kLogEpsilon);
  const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
  const double lo = *lo_it, hi = *hi_it;
  img.pixels.resize(logs.size());
  for (std::size_t row = 0; row < img.height; ++row) {
    const std::size_t iy = img.height - 1 - row;
    for (std::size_t ix = 0; ix < img.width; ++ix) {
      const double t = hi > lo ? (logs[g.ravel(ix, iy)] - lo) / (hi - lo) : 0.0;
      img.pixels[row * img.width + ix] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
  }
  return img;
}

/// Members black (0), everything else white (255); aligned with heatmap_image.
inline GrayImage mask_image(const SafeSet& set) {
  const GridRegion& g = set.region;
  GrayImage img{g.points(0), g.points(1), std::vector<std::uint8_t>(set.mask.size())};
  for (std::size_t row = 0; row < img.height; ++row) {
    const std::size_t iy = img.height - 1 - row;
    for (std::size_t ix = 0; ix < img.width; ++ix)
      img.pixels[row * img.width + ix] = set.mask[g.ravel(ix, iy)] ? 0 : 255;
  }
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_output(path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int maxval = 0;
  GrayImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255) throw std::runtime_error(path.string() + " is not an 8-bit P5 image");
  in.get();
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw std::runtime_error(path.string() + " is truncated");
  return img;
}

}  // namespace partial_control::io
