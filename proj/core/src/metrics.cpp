#include "vcr/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "vcr/error.hpp"

namespace vcr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool both_valid(const RasterImage& a, const RasterImage& b, std::size_t pixel) {
  return a.valid(pixel) && b.valid(pixel);
}

}  // namespace

std::vector<double> psnr_per_band(const RasterImage& ref, const RasterImage& test, double peak) {
  require_same_geometry(ref.geometry(), test.geometry(), "psnr");
  if (!(peak > 0.0)) throw ConfigError("psnr peak must be > 0");
  const std::size_t n = ref.pixel_count();
  std::vector<double> out;
  for (std::size_t b = 0; b < ref.bands(); ++b) {
    auto r = ref.band(b);
    auto t = test.band(b);
    double se = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!both_valid(ref, test, i)) continue;
      se += (r[i] - t[i]) * (r[i] - t[i]);
      ++count;
    }
    if (count == 0) throw GeometryError("psnr: no valid pixels");
    const double mse = se / static_cast<double>(count);
    out.push_back(mse == 0.0 ? kInf : 10.0 * std::log10(peak * peak / mse));
  }
  return out;
}

double psnr(const RasterImage& ref, const RasterImage& test, double peak) {
  const auto per = psnr_per_band(ref, test, peak);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

double ssim(const RasterImage& ref, const RasterImage& test, double peak, const SsimOptions& opts) {
  require_same_geometry(ref.geometry(), test.geometry(), "ssim");
  if (!(peak > 0.0)) throw ConfigError("ssim peak must be > 0");
  if (opts.window % 2 == 0 || opts.window < 1) throw ConfigError("ssim window must be odd");
  const std::size_t w = ref.width(), h = ref.height(), win = opts.window;
  if (win > w || win > h) {
    throw GeometryError(detail::concat("ssim window ", win, " exceeds the image size ", ref.geometry()));
  }
  const double c1 = (opts.k1 * peak) * (opts.k1 * peak);
  const double c2 = (opts.k2 * peak) * (opts.k2 * peak);

  std::vector<double> kern(win * win);
  const auto half = static_cast<double>(win / 2);
  double ksum = 0.0;
  for (std::size_t j = 0; j < win; ++j)
    for (std::size_t i = 0; i < win; ++i) {
      const double dx = static_cast<double>(i) - half, dy = static_cast<double>(j) - half;
      kern[j * win + i] = std::exp(-(dx * dx + dy * dy) / (2.0 * opts.sigma * opts.sigma));
      ksum += kern[j * win + i];
    }
  for (double& k : kern) k /= ksum;

  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t b = 0; b < ref.bands(); ++b) {
    auto r = ref.band(b);
    auto t = test.band(b);
    for (std::size_t y0 = 0; y0 + win <= h; ++y0)
      for (std::size_t x0 = 0; x0 + win <= w; ++x0) {
        bool ok = true;
        double mx = 0.0, my = 0.0;
        for (std::size_t j = 0; j < win && ok; ++j)
          for (std::size_t i = 0; i < win; ++i) {
            const std::size_t p = (y0 + j) * w + x0 + i;
            if (!both_valid(ref, test, p)) {
              ok = false;
              break;
            }
            mx += kern[j * win + i] * r[p];
            my += kern[j * win + i] * t[p];
          }
        if (!ok) continue;
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (std::size_t j = 0; j < win; ++j)
          for (std::size_t i = 0; i < win; ++i) {
            const std::size_t p = (y0 + j) * w + x0 + i;
            const double dx = r[p] - mx, dy = t[p] - my;
            sxx += kern[j * win + i] * dx * dx;
            syy += kern[j * win + i] * dy * dy;
            sxy += kern[j * win + i] * dx * dy;
          }
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
        ++windows;
      }
  }
  if (windows == 0) throw GeometryError("ssim: no window is fully valid");
  return total / static_cast<double>(windows);
}

MsaResult msa(const RasterImage& ref, const RasterImage& test) {
  require_same_geometry(ref.geometry(), test.geometry(), "msa");
  if (ref.bands() < 2) throw GeometryError("msa needs at least two bands");
  const std::size_t n = ref.pixel_count(), bands = ref.bands();
  auto r = ref.samples();
  auto t = test.samples();
  MsaResult res;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!both_valid(ref, test, i)) continue;
    double rr = 0.0, tt = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
      const double a = r[b * n + i], c = t[b * n + i];
      rr += a * a;
      tt += c * c;
    }
    if (rr == 0.0 || tt == 0.0) {
      ++res.skipped;
      continue;
    }
    // 2 atan2(|u - v|, |u + v|) on unit vectors stays accurate near 0 and 180 degrees, unlike acos.
    const double nr = std::sqrt(rr), nt = std::sqrt(tt);
    double dd = 0.0, ss = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
      const double u = r[b * n + i] / nr, v = t[b * n + i] / nt;
      dd += (u - v) * (u - v);
      ss += (u + v) * (u + v);
    }
    sum += 2.0 * std::atan2(std::sqrt(dd), std::sqrt(ss));
    ++count;
  }
  res.degrees = count ? sum / static_cast<double>(count) * 180.0 / std::numbers::pi : 0.0;
  return res;
}

double enl(const RasterImage& img, const Region& region, std::size_t band) {
  if (band >= img.bands()) throw GeometryError(detail::concat("band ", band, " out of range"));
  if (region.width == 0 || region.height == 0 || region.x + region.width > img.width() ||
      region.y + region.height > img.height()) {
    throw GeometryError(detail::concat("ENL region ", region.width, "x", region.height, "+", region.x, "+", region.y,
                                       " does not fit in ", img.geometry()));
  }
  if (region.width * region.height < 4) throw GeometryError("ENL region needs at least 4 pixels");
  auto s = img.band(band);
  double mean = 0.0;
  const auto count = static_cast<double>(region.width * region.height);
  for (std::size_t y = region.y; y < region.y + region.height; ++y)
    for (std::size_t x = region.x; x < region.x + region.width; ++x) mean += s[y * img.width() + x];
  mean /= count;
  double var = 0.0;
  for (std::size_t y = region.y; y < region.y + region.height; ++y)
    for (std::size_t x = region.x; x < region.x + region.width; ++x) {
      const double d = s[y * img.width() + x] - mean;
      var += d * d;
    }
  var /= count;
  return var == 0.0 ? kInf : mean * mean / var;
}

std::string to_json(const MetricReport& report) {
  auto value = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
  };
  nlohmann::ordered_json j;
  j["psnr_db"] = value(report.psnr_db);
  j["ssim"] = value(report.ssim);
  j["msa_deg"] = value(report.msa_deg);
  j["enl"] = value(report.enl);
  j["skipped_pixels"] = report.skipped_pixels;
  if (!report.psnr_per_band.empty()) {
    auto& arr = j["psnr_per_band"] = nlohmann::ordered_json::array();
    for (double v : report.psnr_per_band) arr.push_back(value(v));
  }
  return j.dump(2);
}

}  // namespace vcr
