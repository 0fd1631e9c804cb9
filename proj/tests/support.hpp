#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "vcr/raster.hpp"
#include "vcr/rng.hpp"

namespace vcr::test {

inline RasterImage random_raster(Geometry g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  const CounterRng rng(seed);
  std::vector<double> s(g.sample_count());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = lo + (hi - lo) * rng.uniform(i);
  return RasterImage(g, std::move(s));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const RasterImage& a, const RasterImage& b) {
  return max_abs_diff(a.samples(), b.samples());
}

/// Piecewise-constant single-band scene in [0.2, 1]: background, a bright disc,
/// a dark rectangle and a mid-grey stripe. The 32x32 block at (8, 88) is flat.
inline RasterImage cartoon(std::size_t n = 128) {
  std::vector<double> s(n * n, 0.55);
  const double c = static_cast<double>(n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double fx = static_cast<double>(x) / c, fy = static_cast<double>(y) / c;
      double v = 0.55;
      if ((fx - 0.62) * (fx - 0.62) + (fy - 0.35) * (fy - 0.35) < 0.2 * 0.2) v = 1.0;
      if (fx > 0.12 && fx < 0.42 && fy > 0.12 && fy < 0.5) v = 0.2;
      if (fy > 0.62 && fx > 0.5 && fx < 0.9 && fy < 0.8) v = 0.8;
      s[y * n + x] = v;
    }
  return RasterImage(Geometry{n, n, 1}, std::move(s));
}

/// Smooth low-rank hyperspectral cube: `rank` spatial abundance maps mixed by
/// positive smooth spectra, values roughly in [0.1, 0.9].
inline RasterImage low_rank_cube(std::size_t w, std::size_t h, std::size_t bands, std::size_t rank,
                                 std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<double> maps(rank * w * h);
  for (std::size_t r = 0; r < rank; ++r) {
    const double cx = rng.uniform(4 * r) * static_cast<double>(w);
    const double cy = rng.uniform(4 * r + 1) * static_cast<double>(h);
    const double rad = (0.25 + 0.25 * rng.uniform(4 * r + 2)) * static_cast<double>(std::min(w, h));
    const double freq = 1.0 + 2.0 * rng.uniform(4 * r + 3);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const bool inside = dx * dx + dy * dy < rad * rad;
        const double wave = 0.5 + 0.5 * std::sin(freq * 6.283185307179586 * static_cast<double>(x + y) /
                                                 static_cast<double>(w + h));
        maps[r * w * h + y * w + x] = inside ? 0.8 : 0.2 + 0.3 * wave;
      }
  }
  std::vector<double> s(w * h * bands, 0.0);
  for (std::size_t b = 0; b < bands; ++b) {
    const double t = static_cast<double>(b) / static_cast<double>(std::max<std::size_t>(bands - 1, 1));
    for (std::size_t r = 0; r < rank; ++r) {
      const double centre = (static_cast<double>(r) + 0.5) / static_cast<double>(rank);
      const double weight = (0.3 + 0.7 * std::exp(-8.0 * (t - centre) * (t - centre))) / static_cast<double>(rank);
      for (std::size_t i = 0; i < w * h; ++i) s[b * w * h + i] += weight * maps[r * w * h + i];
    }
  }
  return RasterImage(Geometry{w, h, bands}, std::move(s));
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (unsigned i = 0;; ++i) {
      path_ = base / ("vcr-test-" + std::to_string(::getpid()) + "-" + std::to_string(i));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace vcr::test
