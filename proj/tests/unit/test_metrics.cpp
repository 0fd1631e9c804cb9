#include <cmath>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "vcr/error.hpp"
#include "vcr/metrics.hpp"
#include "vcr/operators.hpp"

using namespace vcr;

TEST_SUITE("metrics") {
  TEST_CASE("psnr hand cases") {
    // mse 1/4 at peak 1: 10 log10(4) = 6.0206 dB
    const auto ref = create_raster(4, 4, 1, 0.0);
    const auto half = create_raster(4, 4, 1, 0.5);
    CHECK(std::abs(psnr(ref, half, 1.0) - 20.0 * std::log10(2.0)) <= 1e-9);
    CHECK(std::abs(psnr(ref, half, 1.0) - 6.0206) <= 1e-4);
    CHECK(psnr(ref, ref, 1.0) == std::numeric_limits<double>::infinity());

    // per-band mean, not pooled
    const RasterImage a(Geometry{1, 1, 2}, {0.0, 0.0});
    const RasterImage b(Geometry{1, 1, 2}, {0.5, 0.1});
    const auto per = psnr_per_band(a, b, 1.0);
    CHECK(per[0] == doctest::Approx(20.0 * std::log10(2.0)));
    CHECK(per[1] == doctest::Approx(20.0));
    CHECK(psnr(a, b, 1.0) == doctest::Approx(0.5 * (per[0] + per[1])));

    // masked pixels do not count
    const RasterImage m(Geometry{2, 1, 1}, {0.0, 0.0}, std::vector<std::uint8_t>{1, 0});
    CHECK(psnr(m, RasterImage(Geometry{2, 1, 1}, {0.5, 100.0}), 1.0) == doctest::Approx(20.0 * std::log10(2.0)));
    CHECK_THROWS_AS(psnr(ref, create_raster(3, 4, 1, 0.0), 1.0), GeometryError);
    CHECK_THROWS_AS(psnr(ref, half, 0.0), ConfigError);
  }

  TEST_CASE("ssim") {
    const auto x = test::random_raster({24, 20, 2}, 3, 0.0, 1.0);
    CHECK(std::abs(ssim(x, x, 1.0) - 1.0) <= 1e-12);
    const auto noisy = add_noise(x, NoiseSpec{GaussianNoise{0.2}, 1});
    const double s = ssim(x, noisy, 1.0);
    CHECK(s < 0.9);
    CHECK(s > -1.0);
    CHECK(ssim(x, noisy, 1.0) == ssim(x, noisy, 1.0));
    CHECK_THROWS_AS(ssim(create_raster(8, 8, 1, 0.0), create_raster(8, 8, 1, 0.0), 1.0), GeometryError);
    SsimOptions small;
    small.window = 3;
    CHECK(std::abs(ssim(create_raster(8, 8, 1, 0.3), create_raster(8, 8, 1, 0.3), 1.0, small) - 1.0) <= 1e-12);
  }

  TEST_CASE("ssim matches a direct single-window evaluation") {
    // With an 11x11 image exactly one window fits.
    const auto a = test::random_raster({11, 11, 1}, 5, 0.0, 1.0);
    const auto b = test::random_raster({11, 11, 1}, 6, 0.0, 1.0);
    std::vector<double> w(121);
    double wsum = 0.0;
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 11; ++x) {
        w[y * 11 + x] = std::exp(-((x - 5) * (x - 5) + (y - 5) * (y - 5)) / (2 * 1.5 * 1.5));
        wsum += w[y * 11 + x];
      }
    double ma = 0, mb = 0;
    for (int i = 0; i < 121; ++i) {
      ma += w[i] / wsum * a.samples()[i];
      mb += w[i] / wsum * b.samples()[i];
    }
    double va = 0, vb = 0, cov = 0;
    for (int i = 0; i < 121; ++i) {
      va += w[i] / wsum * (a.samples()[i] - ma) * (a.samples()[i] - ma);
      vb += w[i] / wsum * (b.samples()[i] - mb) * (b.samples()[i] - mb);
      cov += w[i] / wsum * (a.samples()[i] - ma) * (b.samples()[i] - mb);
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const double expect = (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    CHECK(ssim(a, b, 1.0) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("msa") {
    const RasterImage a(Geometry{1, 1, 2}, {1.0, 0.0});
    const RasterImage b(Geometry{1, 1, 2}, {0.0, 3.0});
    CHECK(std::abs(msa(a, b).degrees - 90.0) <= 1e-9);
    CHECK(msa(a, a).degrees == 0.0);
    const RasterImage c(Geometry{1, 1, 2}, {1.0, 1.0});
    CHECK(msa(a, c).degrees == doctest::Approx(45.0).epsilon(1e-12));
    const RasterImage z(Geometry{2, 1, 2}, {0.0, 1.0, 0.0, 1.0});
    const RasterImage t(Geometry{2, 1, 2}, {1.0, 2.0, 0.0, 2.0});
    const auto r = msa(z, t);
    CHECK(r.skipped == 1);
    CHECK(r.degrees == doctest::Approx(0.0));
    CHECK_THROWS_AS(msa(create_raster(2, 2, 1, 1.0), create_raster(2, 2, 1, 1.0)), GeometryError);
  }

  TEST_CASE("enl") {
    const RasterImage img(Geometry{2, 2, 1}, {1.0, 3.0, 1.0, 3.0});
    CHECK(enl(img, Region{0, 0, 2, 2}) == 4.0);
    CHECK(enl(create_raster(4, 4, 1, 2.0), Region{0, 0, 4, 4}) == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(enl(img, Region{1, 0, 2, 2}), GeometryError);
    CHECK_THROWS_AS(enl(img, Region{0, 0, 1, 2}), GeometryError);

    const auto speckle = add_noise(create_raster(128, 128, 1, 1.0), NoiseSpec{SpeckleNoise{4}, 2});
    CHECK(enl(speckle, Region{0, 0, 128, 128}) == doctest::Approx(4.0).epsilon(0.1));
  }

  TEST_CASE("report json") {
    MetricReport r;
    r.psnr_db = std::numeric_limits<double>::infinity();
    r.ssim = 0.5;
    r.skipped_pixels = 3;
    const auto j = nlohmann::json::parse(to_json(r));
    CHECK(j.at("psnr_db") == "inf");
    CHECK(j.at("ssim") == 0.5);
    CHECK(j.at("msa_deg").is_null());
    CHECK(j.at("enl").is_null());
    CHECK(j.at("skipped_pixels") == 3);
    CHECK_FALSE(j.contains("psnr_per_band"));
  }
}
