#include <cmath>

#include "vcr/error.hpp"
#include "vcr/tasks.hpp"

namespace vcr {

namespace {

double squared_distance(const RasterImage& a, const RasterImage& b) {
  require_same_geometry(a.geometry(), b.geometry(), "loss term");
  auto as = a.samples();
  auto bs = b.samples();
  double s = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i) s += (as[i] - bs[i]) * (as[i] - bs[i]);
  return s;
}

void add_term(LossBreakdown& out, const char* name, double weight, double value) {
  out.terms[name] = value;
  out.total += weight * value;
}

}  // namespace

RasterImage convolve(const RasterImage& img, const BandMatrix& kernel) {
  if (kernel.rows() != kernel.cols() || kernel.rows() % 2 == 0) {
    throw ConfigError(detail::concat("blur kernel must be odd and square, got ", kernel.rows(), "x", kernel.cols()));
  }
  const Geometry& g = img.geometry();
  const auto r = static_cast<std::ptrdiff_t>(kernel.rows() / 2);
  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  auto src = img.samples();
  std::vector<double> out(src.size(), 0.0);
  for (std::size_t b = 0; b < g.bands; ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
          for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            const std::size_t yy = reflect_index(static_cast<std::ptrdiff_t>(y) + dy, h);
            const std::size_t xx = reflect_index(static_cast<std::ptrdiff_t>(x) + dx, w);
            acc += kernel(static_cast<std::size_t>(dy + r), static_cast<std::size_t>(dx + r)) * src[b * n + yy * w + xx];
          }
        out[b * n + y * w + x] = acc;
      }
  return img.with_samples(std::move(out));
}

LossBreakdown evaluate_model_loss(const RasterImage& x, const RestorationLoss& loss) {
  if (!(loss.lambda >= 0.0) || !(loss.beta >= 0.0)) throw ConfigError("loss weights must be >= 0");
  require_same_geometry(loss.op.input_geometry(), x.geometry(), "loss operator input");
  LossBreakdown out;
  add_term(out, "fidelity", 1.0, squared_distance(loss.y, apply(loss.op, x)));
  add_term(out, "prior", loss.lambda, tv_value(x));
  if (loss.beta > 0.0 || loss.label) {
    if (!loss.label) throw ConfigError("label term requested without a label image");
    add_term(out, "label", loss.beta, std::sqrt(squared_distance(x, *loss.label)));
  }
  return out;
}

LossBreakdown evaluate_model_loss(const RasterImage& x, const BlindFusionLoss& loss) {
  if (!(loss.lambda >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (loss.srf.cols() != x.bands() || loss.srf.rows() != loss.z.bands()) {
    throw GeometryError(detail::concat("spectral response is ", loss.srf.rows(), "x", loss.srf.cols(), ", expected ",
                                       loss.z.bands(), "x", x.bands()));
  }
  LossBreakdown out;
  const RasterImage px = apply(LinearOperator::spectral_response(x.geometry(), loss.srf), x);
  add_term(out, "spectral", 1.0, squared_distance(loss.z, px));
  const RasterImage blurred = convolve(x, loss.kernel);
  const RasterImage down = apply(LinearOperator::downsample(x.geometry(), loss.ratio), blurred);
  add_term(out, "spatial", 1.0, squared_distance(loss.y, down));
  const double kn = loss.kernel.frobenius_norm(), pn = loss.srf.frobenius_norm();
  add_term(out, "operators", loss.lambda, kn * kn + pn * pn);
  return out;
}

}  // namespace vcr
