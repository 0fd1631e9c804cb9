#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "vcr/raster.hpp"

namespace vcr {

enum class OperatorKind { identity, blur, downsample, mask, gain_offset, spectral_response, composite };

const char* to_string(OperatorKind kind) noexcept;

/// Linear degradation operator with an exact adjoint.
///
/// Kinds and their action on a raster x:
///   identity           x
///   blur               separable truncated Gaussian, renormalized to unit sum,
///                      half-sample symmetric boundary
///   downsample         r x r block mean; adjoint spreads each coarse pixel over
///                      its block scaled by 1/r^2
///   mask               zeroes invalid pixels (self-adjoint)
///   gain_offset        per-sample gain (the offset lives in apply_affine_degradation)
///   spectral_response  out_b = sum_s P[b, s] * in_s
///   composite          stages applied first to last
///
/// Cheap to copy: parameters are shared and immutable.
class LinearOperator {
 public:
  static LinearOperator identity(Geometry geometry);
  /// radius defaults to ceil(3 sigma). sigma <= 0 is only allowed with radius 0.
  static LinearOperator blur(Geometry geometry, double sigma, std::optional<std::size_t> radius = std::nullopt);
  /// Width and height must be divisible by factor.
  static LinearOperator downsample(Geometry geometry, std::size_t factor);
  /// One validity byte per pixel, shared by all bands.
  static LinearOperator mask(Geometry geometry, std::vector<std::uint8_t> valid);
  /// Gain raster defines the geometry.
  static LinearOperator gain(RasterImage gain);
  /// P is (output bands) x (input bands).
  static LinearOperator spectral_response(Geometry input, BandMatrix p);
  static LinearOperator composite(std::vector<LinearOperator> stages);

  OperatorKind kind() const noexcept;
  const Geometry& input_geometry() const noexcept;
  const Geometry& output_geometry() const noexcept;

  /// Composite stages; empty for other kinds.
  std::span<const LinearOperator> stages() const noexcept;
  /// Normalized blur taps (length 2 * radius + 1); empty for other kinds.
  std::span<const double> blur_kernel() const noexcept;
  std::size_t downsample_factor() const noexcept;
  /// Spectral response matrix; nullptr for other kinds.
  const BandMatrix* response() const noexcept;

  struct Impl;

 private:
  explicit LinearOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;

  friend RasterImage apply(const LinearOperator& op, const RasterImage& img);
  friend RasterImage apply_adjoint(const LinearOperator& op, const RasterImage& img);
};

RasterImage apply(const LinearOperator& op, const RasterImage& img);
RasterImage apply_adjoint(const LinearOperator& op, const RasterImage& img);

/// apply(op, img) + offset. Models haze/shadow as gain plus additive path radiance.
RasterImage apply_affine_degradation(const LinearOperator& op, const std::optional<RasterImage>& offset,
                                     const RasterImage& img);

/// Truncated Gaussian taps for offsets -radius..radius, summing to 1.
std::vector<double> gaussian_kernel(double sigma, std::size_t radius);

/// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept;

// ---- noise ----------------------------------------------------------------------

struct GaussianNoise {
  double sigma = 0.0;
};

/// Multiplicative Gamma(L, L) speckle: unit mean, variance 1/L.
struct SpeckleNoise {
  unsigned looks = 1;
};

struct ImpulseNoise {
  double density = 0.0;
  double low = 0.0;
  double high = 1.0;
};

enum class StripeOrientation { horizontal, vertical };

/// Additive amplitude * sin(2 pi t / period), t = row index for horizontal
/// stripes, column index for vertical ones. Deterministic.
struct StripeNoise {
  StripeOrientation orientation = StripeOrientation::vertical;
  double period = 8.0;
  double amplitude = 0.0;
};

struct NoiseSpec {
  std::variant<GaussianNoise, SpeckleNoise, ImpulseNoise, StripeNoise> family;
  std::uint64_t seed = 0;
};

void validate(const NoiseSpec& spec);

/// Same seed and input give identical output bytes.
RasterImage add_noise(const RasterImage& img, const NoiseSpec& spec);

/// log x + y / x, the per-pixel Gamma negative log-likelihood. Throws DomainError for x <= 0.
double gamma_neglog_likelihood(double x, double y);

}  // namespace vcr
