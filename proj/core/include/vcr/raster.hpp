#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vcr {

struct Geometry {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;

  std::size_t pixel_count() const noexcept { return width * height; }
  std::size_t sample_count() const noexcept { return width * height * bands; }
  bool operator==(const Geometry&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Geometry& g);

/// Multi-band raster: 64-bit samples, band-sequential, row-major within a band.
///
/// Immutable once built. The constructor enforces every invariant (positive
/// geometry, matching sample count, finite samples, positive wavelengths), so
/// any RasterImage that exists is valid. Operations return new rasters.
class RasterImage {
 public:
  RasterImage(Geometry geometry, std::vector<double> samples,
              std::optional<std::vector<std::uint8_t>> mask = std::nullopt,
              std::optional<std::vector<double>> wavelengths = std::nullopt);

  const Geometry& geometry() const noexcept { return geometry_; }
  std::size_t width() const noexcept { return geometry_.width; }
  std::size_t height() const noexcept { return geometry_.height; }
  std::size_t bands() const noexcept { return geometry_.bands; }
  std::size_t pixel_count() const noexcept { return geometry_.pixel_count(); }
  std::size_t sample_count() const noexcept { return samples_.size(); }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<const double> band(std::size_t b) const;
  double at(std::size_t x, std::size_t y, std::size_t b = 0) const;

  bool has_mask() const noexcept { return mask_.has_value(); }
  /// Empty span when there is no mask.
  std::span<const std::uint8_t> mask() const noexcept;
  /// Pixel index (y * width + x) is usable by metrics and fidelity terms.
  bool valid(std::size_t pixel) const noexcept { return !mask_ || (*mask_)[pixel] != 0; }

  const std::optional<std::vector<double>>& wavelengths() const noexcept { return wavelengths_; }

  /// Same geometry, mask and wavelengths; new samples.
  RasterImage with_samples(std::vector<double> samples) const;
  RasterImage with_mask(std::optional<std::vector<std::uint8_t>> mask) const;

  bool operator==(const RasterImage&) const = default;

 private:
  Geometry geometry_;
  std::vector<double> samples_;
  std::optional<std::vector<std::uint8_t>> mask_;
  std::optional<std::vector<double>> wavelengths_;
};

/// Throws GeometryError for a zero dimension, DomainError for a non-finite fill.
RasterImage create_raster(std::size_t width, std::size_t height, std::size_t bands, double fill);

/// Re-checks every RasterImage invariant; throws on violation.
void validate(const RasterImage& img);

void require_same_geometry(const Geometry& a, const Geometry& b, const char* context);

// Elementwise helpers. Results inherit the mask and wavelengths of the first operand.
double dot(const RasterImage& a, const RasterImage& b);
double norm(const RasterImage& a);
RasterImage operator+(const RasterImage& a, const RasterImage& b);
RasterImage operator-(const RasterImage& a, const RasterImage& b);
RasterImage operator*(double s, const RasterImage& a);
/// a*x + b*y
RasterImage lincomb(double a, const RasterImage& x, double b, const RasterImage& y);

/// Small dense row-major matrix: spectral responses, subspace bases, dictionaries.
class BandMatrix {
 public:
  BandMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static BandMatrix identity(std::size_t n);
  static BandMatrix zeros(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> entries() const noexcept { return entries_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

  BandMatrix transpose() const;
  double frobenius_norm() const;

  bool operator==(const BandMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

BandMatrix operator*(const BandMatrix& a, const BandMatrix& b);

// ---- files ------------------------------------------------------------------

/// VCR1 container: "VCR1" | u32 LE header length | JSON header | f32 LE payload | optional mask bytes.
void write_raster(const RasterImage& img, const std::filesystem::path& path);
RasterImage read_raster(const std::filesystem::path& path);

/// In-memory variants used by the file functions and by tests.
std::vector<std::uint8_t> encode_raster(const RasterImage& img);
RasterImage decode_raster(std::span<const std::uint8_t> bytes);

/// Binary PGM (P5), maxval 255 or 65535, scaled to [0, 1].
RasterImage import_pgm(const std::filesystem::path& path);
RasterImage decode_pgm(std::span<const std::uint8_t> bytes);

/// {"rows": r, "cols": c, "entries": [...]} row-major.
BandMatrix read_band_matrix(const std::filesystem::path& path);
BandMatrix parse_band_matrix(const std::string& json_text);
std::string band_matrix_to_json(const BandMatrix& m);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace vcr
