#include "vcr/raster.hpp"

#include <cmath>
#include <ostream>

#include "vcr/error.hpp"

namespace vcr {

std::ostream& operator<<(std::ostream& os, const Geometry& g) {
  return os << g.width << "x" << g.height << "x" << g.bands;
}

namespace {

void check_geometry(const Geometry& g) {
  if (g.width == 0 || g.height == 0 || g.bands == 0) {
    throw GeometryError(detail::concat("invalid geometry ", g, ": every dimension must be >= 1"));
  }
}

}  // namespace

RasterImage::RasterImage(Geometry geometry, std::vector<double> samples,
                         std::optional<std::vector<std::uint8_t>> mask,
                         std::optional<std::vector<double>> wavelengths)
    : geometry_(geometry),
      samples_(std::move(samples)),
      mask_(std::move(mask)),
      wavelengths_(std::move(wavelengths)) {
  check_geometry(geometry_);
  if (samples_.size() != geometry_.sample_count()) {
    throw GeometryError(detail::concat("raster ", geometry_, " needs ", geometry_.sample_count(),
                                       " samples, got ", samples_.size()));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw DomainError(detail::concat("non-finite sample at index ", i));
    }
  }
  if (mask_) {
    if (mask_->size() != geometry_.pixel_count()) {
      throw GeometryError(detail::concat("mask has ", mask_->size(), " entries, raster has ",
                                         geometry_.pixel_count(), " pixels"));
    }
    for (auto& m : *mask_) m = m != 0 ? 1 : 0;
  }
  if (wavelengths_) {
    if (wavelengths_->size() != geometry_.bands) {
      throw GeometryError(detail::concat("wavelength list has ", wavelengths_->size(),
                                         " entries for ", geometry_.bands, " bands"));
    }
    for (double w : *wavelengths_) {
      if (!(std::isfinite(w) && w > 0.0)) {
        throw DomainError("wavelengths must be finite and strictly positive");
      }
    }
  }
}

std::span<const double> RasterImage::band(std::size_t b) const {
  if (b >= geometry_.bands) {
    throw GeometryError(detail::concat("band ", b, " out of range for ", geometry_));
  }
  const std::size_t n = geometry_.pixel_count();
  return std::span<const double>(samples_).subspan(b * n, n);
}

double RasterImage::at(std::size_t x, std::size_t y, std::size_t b) const {
  if (x >= geometry_.width || y >= geometry_.height || b >= geometry_.bands) {
    throw GeometryError(detail::concat("sample (", x, ", ", y, ", ", b, ") outside ", geometry_));
  }
  return samples_[(b * geometry_.height + y) * geometry_.width + x];
}

std::span<const std::uint8_t> RasterImage::mask() const noexcept {
  if (!mask_) return {};
  return *mask_;
}

RasterImage RasterImage::with_samples(std::vector<double> samples) const {
  return RasterImage(geometry_, std::move(samples), mask_, wavelengths_);
}

RasterImage RasterImage::with_mask(std::optional<std::vector<std::uint8_t>> mask) const {
  return RasterImage(geometry_, samples_, std::move(mask), wavelengths_);
}

RasterImage create_raster(std::size_t width, std::size_t height, std::size_t bands, double fill) {
  Geometry g{width, height, bands};
  check_geometry(g);
  if (!std::isfinite(fill)) throw DomainError("fill value must be finite");
  return RasterImage(g, std::vector<double>(g.sample_count(), fill));
}

void validate(const RasterImage& img) {
  // Reconstructing runs the full invariant check.
  RasterImage copy(img.geometry(), std::vector<double>(img.samples().begin(), img.samples().end()),
                   img.has_mask() ? std::optional<std::vector<std::uint8_t>>(std::vector<std::uint8_t>(
                                        img.mask().begin(), img.mask().end()))
                                  : std::nullopt,
                   img.wavelengths());
  (void)copy;
}

void require_same_geometry(const Geometry& a, const Geometry& b, const char* context) {
  if (!(a == b)) {
    throw GeometryError(detail::concat(context, ": geometry mismatch ", a, " vs ", b));
  }
}

double dot(const RasterImage& a, const RasterImage& b) {
  require_same_geometry(a.geometry(), b.geometry(), "dot");
  double s = 0.0;
  auto x = a.samples();
  auto y = b.samples();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm(const RasterImage& a) { return std::sqrt(dot(a, a)); }

RasterImage lincomb(double a, const RasterImage& x, double b, const RasterImage& y) {
  require_same_geometry(x.geometry(), y.geometry(), "lincomb");
  auto xs = x.samples();
  auto ys = y.samples();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xs[i] + b * ys[i];
  return x.with_samples(std::move(out));
}

RasterImage operator+(const RasterImage& a, const RasterImage& b) { return lincomb(1.0, a, 1.0, b); }
RasterImage operator-(const RasterImage& a, const RasterImage& b) { return lincomb(1.0, a, -1.0, b); }

RasterImage operator*(double s, const RasterImage& a) {
  std::vector<double> out(a.samples().begin(), a.samples().end());
  for (auto& v : out) v *= s;
  return a.with_samples(std::move(out));
}

// ---- BandMatrix ---------------------------------------------------------------

BandMatrix::BandMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows_ == 0 || cols_ == 0) throw GeometryError("band matrix needs rows, cols >= 1");
  if (entries_.size() != rows_ * cols_) {
    throw GeometryError(detail::concat("band matrix ", rows_, "x", cols_, " needs ", rows_ * cols_,
                                       " entries, got ", entries_.size()));
  }
  for (double v : entries_) {
    if (!std::isfinite(v)) throw DomainError("band matrix entries must be finite");
  }
}

BandMatrix BandMatrix::identity(std::size_t n) {
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
  return BandMatrix(n, n, std::move(e));
}

BandMatrix BandMatrix::zeros(std::size_t rows, std::size_t cols) {
  return BandMatrix(rows, cols, std::vector<double>(rows * cols, 0.0));
}

BandMatrix BandMatrix::transpose() const {
  std::vector<double> e(entries_.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) e[c * rows_ + r] = entries_[r * cols_ + c];
  return BandMatrix(cols_, rows_, std::move(e));
}

double BandMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : entries_) s += v * v;
  return std::sqrt(s);
}

BandMatrix operator*(const BandMatrix& a, const BandMatrix& b) {
  if (a.cols() != b.rows()) {
    throw GeometryError(detail::concat("band matrix product ", a.rows(), "x", a.cols(), " * ",
                                       b.rows(), "x", b.cols()));
  }
  std::vector<double> e(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) e[i * b.cols() + j] += aik * b(k, j);
    }
  return BandMatrix(a.rows(), b.cols(), std::move(e));
}

}  // namespace vcr
