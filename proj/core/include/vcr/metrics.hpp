#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vcr/raster.hpp"

namespace vcr {

/// Mean of per-band PSNRs over valid pixels of `ref`. +inf when every band matches.
double psnr(const RasterImage& ref, const RasterImage& test, double peak);
std::vector<double> psnr_per_band(const RasterImage& ref, const RasterImage& test, double peak);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Gaussian-windowed SSIM averaged over windows lying inside the image whose
/// pixels are all valid, then over bands.
double ssim(const RasterImage& ref, const RasterImage& test, double peak, const SsimOptions& opts = {});

struct MsaResult {
  double degrees = 0.0;
  /// Valid pixels left out because either spectrum had zero norm.
  std::size_t skipped = 0;
};

MsaResult msa(const RasterImage& ref, const RasterImage& test);

struct Region {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;
};

/// mean^2 / population variance over the region of one band; +inf for zero variance.
double enl(const RasterImage& img, const Region& region, std::size_t band = 0);

struct MetricReport {
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  std::optional<double> msa_deg;
  std::optional<double> enl;
  std::size_t skipped_pixels = 0;
  std::vector<double> psnr_per_band;
};

/// Keys psnr_db, ssim, msa_deg, enl, skipped_pixels (+ psnr_per_band).
/// Infinite values are written as "inf", unavailable ones as null.
std::string to_json(const MetricReport& report);

}  // namespace vcr
