#include "vcr/operators.hpp"

#include <cmath>

#include "vcr/error.hpp"

namespace vcr {

const char* to_string(OperatorKind kind) noexcept {
  switch (kind) {
    case OperatorKind::identity: return "identity";
    case OperatorKind::blur: return "blur";
    case OperatorKind::downsample: return "downsample";
    case OperatorKind::mask: return "mask";
    case OperatorKind::gain_offset: return "gain-offset";
    case OperatorKind::spectral_response: return "spectral-response";
    case OperatorKind::composite: return "composite";
  }
  return "unknown";
}

struct LinearOperator::Impl {
  OperatorKind kind = OperatorKind::identity;
  Geometry in;
  Geometry out;
  std::vector<double> kernel;                 // blur
  std::size_t factor = 1;                     // downsample
  std::vector<std::uint8_t> valid;            // mask
  std::vector<double> gain;                   // gain_offset
  std::optional<BandMatrix> response;         // spectral_response
  std::vector<LinearOperator> stages;         // composite
};

namespace {

void check_positive(const Geometry& g) {
  if (g.width == 0 || g.height == 0 || g.bands == 0) {
    throw GeometryError(detail::concat("invalid operator geometry ", g));
  }
}

// One-dimensional symmetric-boundary correlation along a strided line.
void blur_line(const double* in, double* out, std::size_t n, std::size_t stride, std::span<const double> k) {
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
      const std::size_t j = reflect_index(static_cast<std::ptrdiff_t>(i) + t, n);
      s += k[static_cast<std::size_t>(t + radius)] * in[j * stride];
    }
    out[i * stride] = s;
  }
}

void blur_line_adjoint(const double* in, double* out, std::size_t n, std::size_t stride,
                       std::span<const double> k) {
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  for (std::size_t i = 0; i < n; ++i) out[i * stride] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = in[i * stride];
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
      const std::size_t j = reflect_index(static_cast<std::ptrdiff_t>(i) + t, n);
      out[j * stride] += k[static_cast<std::size_t>(t + radius)] * v;
    }
  }
}

std::vector<double> blur_samples(const Geometry& g, std::span<const double> x, std::span<const double> k,
                                 bool adjoint) {
  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  std::vector<double> tmp(x.size()), out(x.size());
  auto line = adjoint ? blur_line_adjoint : blur_line;
  for (std::size_t b = 0; b < g.bands; ++b) {
    const double* src = x.data() + b * n;
    double* mid = tmp.data() + b * n;
    double* dst = out.data() + b * n;
    if (!adjoint) {
      for (std::size_t y = 0; y < h; ++y) line(src + y * w, mid + y * w, w, 1, k);
      for (std::size_t c = 0; c < w; ++c) line(mid + c, dst + c, h, w, k);
    } else {
      for (std::size_t c = 0; c < w; ++c) line(src + c, mid + c, h, w, k);
      for (std::size_t y = 0; y < h; ++y) line(mid + y * w, dst + y * w, w, 1, k);
    }
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> copy_mask(const RasterImage& img) {
  if (!img.has_mask()) return std::nullopt;
  return std::vector<std::uint8_t>(img.mask().begin(), img.mask().end());
}

RasterImage forward(const LinearOperator::Impl& op, const RasterImage& img);
RasterImage adjoint(const LinearOperator::Impl& op, const RasterImage& img);

RasterImage forward(const LinearOperator::Impl& op, const RasterImage& img) {
  require_same_geometry(img.geometry(), op.in, "apply");
  const Geometry& g = op.in;
  auto x = img.samples();
  switch (op.kind) {
    case OperatorKind::identity:
      return img;
    case OperatorKind::blur:
      return img.with_samples(blur_samples(g, x, op.kernel, false));
    case OperatorKind::downsample: {
      const std::size_t r = op.factor, ow = op.out.width, oh = op.out.height;
      const double inv = 1.0 / static_cast<double>(r * r);
      std::vector<double> out(op.out.sample_count(), 0.0);
      for (std::size_t b = 0; b < g.bands; ++b)
        for (std::size_t y = 0; y < g.height; ++y)
          for (std::size_t c = 0; c < g.width; ++c)
            out[(b * oh + y / r) * ow + c / r] += x[(b * g.height + y) * g.width + c];
      for (auto& v : out) v *= inv;
      return RasterImage(op.out, std::move(out));
    }
    case OperatorKind::mask: {
      std::vector<double> out(x.begin(), x.end());
      const std::size_t n = g.pixel_count();
      for (std::size_t b = 0; b < g.bands; ++b)
        for (std::size_t p = 0; p < n; ++p)
          if (!op.valid[p]) out[b * n + p] = 0.0;
      std::vector<std::uint8_t> m = op.valid;
      if (img.has_mask())
        for (std::size_t p = 0; p < n; ++p) m[p] = m[p] && img.mask()[p];
      return RasterImage(g, std::move(out), std::move(m), img.wavelengths());
    }
    case OperatorKind::gain_offset: {
      std::vector<double> out(x.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = op.gain[i] * x[i];
      return img.with_samples(std::move(out));
    }
    case OperatorKind::spectral_response: {
      const BandMatrix& p = *op.response;
      const std::size_t n = g.pixel_count();
      std::vector<double> out(op.out.sample_count(), 0.0);
      for (std::size_t ob = 0; ob < p.rows(); ++ob)
        for (std::size_t ib = 0; ib < p.cols(); ++ib) {
          const double w = p(ob, ib);
          if (w == 0.0) continue;
          for (std::size_t q = 0; q < n; ++q) out[ob * n + q] += w * x[ib * n + q];
        }
      return RasterImage(op.out, std::move(out), copy_mask(img));
    }
    case OperatorKind::composite: {
      RasterImage cur = img;
      for (const auto& s : op.stages) cur = apply(s, cur);
      return cur;
    }
  }
  throw ConfigError("unknown operator kind");
}

RasterImage adjoint(const LinearOperator::Impl& op, const RasterImage& img) {
  require_same_geometry(img.geometry(), op.out, "apply_adjoint");
  const Geometry& g = op.in;
  auto y = img.samples();
  switch (op.kind) {
    case OperatorKind::identity:
      return img;
    case OperatorKind::blur:
      return img.with_samples(blur_samples(g, y, op.kernel, true));
    case OperatorKind::downsample: {
      const std::size_t r = op.factor, ow = op.out.width, oh = op.out.height;
      const double inv = 1.0 / static_cast<double>(r * r);
      std::vector<double> out(g.sample_count());
      for (std::size_t b = 0; b < g.bands; ++b)
        for (std::size_t row = 0; row < g.height; ++row)
          for (std::size_t c = 0; c < g.width; ++c)
            out[(b * g.height + row) * g.width + c] = inv * y[(b * oh + row / r) * ow + c / r];
      return RasterImage(g, std::move(out));
    }
    case OperatorKind::mask:
      return forward(op, img);
    case OperatorKind::gain_offset:
      return forward(op, img);
    case OperatorKind::spectral_response: {
      const BandMatrix& p = *op.response;
      const std::size_t n = g.pixel_count();
      std::vector<double> out(g.sample_count(), 0.0);
      for (std::size_t ob = 0; ob < p.rows(); ++ob)
        for (std::size_t ib = 0; ib < p.cols(); ++ib) {
          const double w = p(ob, ib);
          if (w == 0.0) continue;
          for (std::size_t q = 0; q < n; ++q) out[ib * n + q] += w * y[ob * n + q];
        }
      return RasterImage(g, std::move(out), copy_mask(img));
    }
    case OperatorKind::composite: {
      RasterImage cur = img;
      for (auto it = op.stages.rbegin(); it != op.stages.rend(); ++it) cur = apply_adjoint(*it, cur);
      return cur;
    }
  }
  throw ConfigError("unknown operator kind");
}

}  // namespace

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

std::vector<double> gaussian_kernel(double sigma, std::size_t radius) {
  if (radius == 0) return {1.0};
  if (!(sigma > 0.0)) throw DomainError("blur sigma must be positive when the radius is nonzero");
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double t = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

LinearOperator LinearOperator::identity(Geometry geometry) {
  check_positive(geometry);
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::identity;
  impl->in = impl->out = geometry;
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::blur(Geometry geometry, double sigma, std::optional<std::size_t> radius) {
  check_positive(geometry);
  if (!std::isfinite(sigma)) throw DomainError("blur sigma must be finite");
  const std::size_t r = radius ? *radius : (sigma > 0.0 ? static_cast<std::size_t>(std::ceil(3.0 * sigma)) : 0);
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::blur;
  impl->in = impl->out = geometry;
  impl->kernel = gaussian_kernel(sigma, r);
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::downsample(Geometry geometry, std::size_t factor) {
  check_positive(geometry);
  if (factor == 0) throw GeometryError("downsample factor must be >= 1");
  if (geometry.width % factor != 0 || geometry.height % factor != 0) {
    throw GeometryError(detail::concat("downsample factor ", factor, " does not divide ", geometry));
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::downsample;
  impl->in = geometry;
  impl->out = Geometry{geometry.width / factor, geometry.height / factor, geometry.bands};
  impl->factor = factor;
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::mask(Geometry geometry, std::vector<std::uint8_t> valid) {
  check_positive(geometry);
  if (valid.size() != geometry.pixel_count()) {
    throw GeometryError(detail::concat("mask plane has ", valid.size(), " entries for ", geometry));
  }
  for (auto& v : valid) v = v != 0 ? 1 : 0;
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::mask;
  impl->in = impl->out = geometry;
  impl->valid = std::move(valid);
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::gain(RasterImage gain) {
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::gain_offset;
  impl->in = impl->out = gain.geometry();
  impl->gain.assign(gain.samples().begin(), gain.samples().end());
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::spectral_response(Geometry input, BandMatrix p) {
  check_positive(input);
  if (p.cols() != input.bands) {
    throw GeometryError(detail::concat("spectral response has ", p.cols(), " input columns for a ",
                                       input.bands, "-band raster"));
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::spectral_response;
  impl->in = input;
  impl->out = Geometry{input.width, input.height, p.rows()};
  impl->response = std::move(p);
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::composite(std::vector<LinearOperator> stages) {
  if (stages.empty()) throw ConfigError("composite operator needs at least one stage");
  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (!(stages[i - 1].output_geometry() == stages[i].input_geometry())) {
      throw GeometryError(detail::concat("composite stage ", i - 1, " outputs ", stages[i - 1].output_geometry(),
                                         " but stage ", i, " expects ", stages[i].input_geometry()));
    }
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = OperatorKind::composite;
  impl->in = stages.front().input_geometry();
  impl->out = stages.back().output_geometry();
  impl->stages = std::move(stages);
  return LinearOperator(std::move(impl));
}

OperatorKind LinearOperator::kind() const noexcept { return impl_->kind; }
const Geometry& LinearOperator::input_geometry() const noexcept { return impl_->in; }
const Geometry& LinearOperator::output_geometry() const noexcept { return impl_->out; }
std::span<const LinearOperator> LinearOperator::stages() const noexcept { return impl_->stages; }
std::span<const double> LinearOperator::blur_kernel() const noexcept { return impl_->kernel; }
std::size_t LinearOperator::downsample_factor() const noexcept { return impl_->factor; }
const BandMatrix* LinearOperator::response() const noexcept {
  return impl_->response ? &*impl_->response : nullptr;
}

RasterImage apply(const LinearOperator& op, const RasterImage& img) { return forward(*op.impl_, img); }

RasterImage apply_adjoint(const LinearOperator& op, const RasterImage& img) { return adjoint(*op.impl_, img); }

RasterImage apply_affine_degradation(const LinearOperator& op, const std::optional<RasterImage>& offset,
                                     const RasterImage& img) {
  if (offset) require_same_geometry(offset->geometry(), op.output_geometry(), "affine degradation offset");
  RasterImage out = apply(op, img);
  return offset ? out + *offset : out;
}

double gamma_neglog_likelihood(double x, double y) {
  if (!(x > 0.0)) throw DomainError(detail::concat("Gamma likelihood needs x > 0, got ", x));
  return std::log(x) + y / x;
}

}  // namespace vcr
