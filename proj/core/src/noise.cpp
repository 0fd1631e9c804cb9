#include <cmath>
#include <numbers>

#include "vcr/error.hpp"
#include "vcr/operators.hpp"
#include "vcr/rng.hpp"

namespace vcr {

namespace {

struct NoiseValidator {
  void operator()(const GaussianNoise& n) const {
    if (!(n.sigma >= 0.0) || !std::isfinite(n.sigma)) throw ConfigError("gaussian sigma must be >= 0");
  }
  void operator()(const SpeckleNoise& n) const {
    if (n.looks < 1) throw ConfigError("speckle looks must be >= 1");
  }
  void operator()(const ImpulseNoise& n) const {
    if (!(n.density >= 0.0 && n.density <= 1.0)) throw ConfigError("impulse density must lie in [0, 1]");
    if (!std::isfinite(n.low) || !std::isfinite(n.high)) throw ConfigError("impulse values must be finite");
  }
  void operator()(const StripeNoise& n) const {
    if (!(n.period >= 1.0) || !std::isfinite(n.period)) throw ConfigError("stripe period must be >= 1 pixel");
    if (!std::isfinite(n.amplitude)) throw ConfigError("stripe amplitude must be finite");
  }
};

struct NoiseApplier {
  const RasterImage& img;
  CounterRng rng;

  std::vector<double> operator()(const GaussianNoise& n) const {
    std::vector<double> out(img.samples().begin(), img.samples().end());
    if (n.sigma == 0.0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += n.sigma * rng.normal(i);
    return out;
  }

  std::vector<double> operator()(const SpeckleNoise& n) const {
    std::vector<double> out(img.samples().begin(), img.samples().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] < 0.0) {
        throw DomainError(detail::concat("speckle needs non-negative samples; sample ", i, " is ", out[i]));
      }
    }
    const std::uint64_t looks = n.looks;
    for (std::size_t i = 0; i < out.size(); ++i) {
      // Gamma(L, L) as a sum of L unit exponentials scaled by 1/L.
      double g = 0.0;
      for (std::uint64_t k = 0; k < looks; ++k) g += rng.exponential(i * looks + k);
      out[i] *= g / static_cast<double>(looks);
    }
    return out;
  }

  std::vector<double> operator()(const ImpulseNoise& n) const {
    std::vector<double> out(img.samples().begin(), img.samples().end());
    const double half = 0.5 * n.density;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double u = rng.uniform(i);
      if (u < half) {
        out[i] = n.low;
      } else if (u < n.density) {
        out[i] = n.high;
      }
    }
    return out;
  }

  std::vector<double> operator()(const StripeNoise& n) const {
    std::vector<double> out(img.samples().begin(), img.samples().end());
    const Geometry& g = img.geometry();
    for (std::size_t b = 0; b < g.bands; ++b)
      for (std::size_t y = 0; y < g.height; ++y)
        for (std::size_t x = 0; x < g.width; ++x) {
          const double t = static_cast<double>(n.orientation == StripeOrientation::horizontal ? y : x);
          out[(b * g.height + y) * g.width + x] += n.amplitude * std::sin(2.0 * std::numbers::pi * t / n.period);
        }
    return out;
  }
};

}  // namespace

void validate(const NoiseSpec& spec) { std::visit(NoiseValidator{}, spec.family); }

RasterImage add_noise(const RasterImage& img, const NoiseSpec& spec) {
  validate(spec);
  return img.with_samples(std::visit(NoiseApplier{img, CounterRng(spec.seed)}, spec.family));
}

}  // namespace vcr
