#include <cmath>

#include "vcr/error.hpp"
#include "vcr/priors.hpp"

namespace vcr {

GradientField forward_gradient(const RasterImage& img) {
  const Geometry& g = img.geometry();
  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  auto u = img.samples();
  std::vector<double> dx(u.size(), 0.0), dy(u.size(), 0.0);
  for (std::size_t b = 0; b < g.bands; ++b) {
    const std::size_t o = b * n;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = o + y * w + x;
        if (x + 1 < w) dx[i] = u[i + 1] - u[i];
        if (y + 1 < h) dy[i] = u[i + w] - u[i];
      }
  }
  return {RasterImage(g, std::move(dx)), RasterImage(g, std::move(dy))};
}

RasterImage forward_gradient_adjoint(const GradientField& field) {
  require_same_geometry(field.dx.geometry(), field.dy.geometry(), "gradient adjoint");
  const Geometry& g = field.dx.geometry();
  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  auto px = field.dx.samples();
  auto py = field.dy.samples();
  std::vector<double> out(px.size(), 0.0);
  for (std::size_t b = 0; b < g.bands; ++b) {
    const std::size_t o = b * n;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = o + y * w + x;
        if (x + 1 < w) {
          out[i] -= px[i];
          out[i + 1] += px[i];
        }
        if (y + 1 < h) {
          out[i] -= py[i];
          out[i + w] += py[i];
        }
      }
  }
  return RasterImage(g, std::move(out));
}

double tv_value(const RasterImage& img) {
  const auto grad = forward_gradient(img);
  auto gx = grad.dx.samples();
  auto gy = grad.dy.samples();
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) s += std::hypot(gx[i], gy[i]);
  return s;
}

double smooth_tv_value(const RasterImage& img, double eps) {
  const auto grad = forward_gradient(img);
  auto gx = grad.dx.samples();
  auto gy = grad.dy.samples();
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) s += std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + eps * eps);
  return s;
}

RasterImage smooth_tv_gradient(const RasterImage& img, double eps) {
  if (!(eps > 0.0)) throw ConfigError("smoothed TV needs eps > 0");
  const auto grad = forward_gradient(img);
  auto gx = grad.dx.samples();
  auto gy = grad.dy.samples();
  std::vector<double> nx(gx.size()), ny(gy.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double r = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + eps * eps);
    nx[i] = gx[i] / r;
    ny[i] = gy[i] / r;
  }
  const Geometry& g = img.geometry();
  return forward_gradient_adjoint({RasterImage(g, std::move(nx)), RasterImage(g, std::move(ny))});
}

double tv_prox_objective(const RasterImage& u, const RasterImage& f, double weight) {
  const RasterImage d = u - f;
  return 0.5 * dot(d, d) + weight * tv_value(u);
}

RasterImage tv_prox(const RasterImage& img, double weight, std::size_t iterations, double dual_step) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw ConfigError("TV weight must be finite and >= 0");
  if (iterations == 0) throw ConfigError("TV inner iterations must be >= 1");
  if (!(dual_step > 0.0 && dual_step < 0.25 + 1e-12)) throw ConfigError("TV dual step must lie in (0, 1/4]");
  if (weight == 0.0) return img;

  // Fast gradient projection on the dual of min 1/2||u - f||^2 + w TV(u):
  //   u(p) = f - w D^T p,  p <- Proj_{|p_i| <= 1}(q + (step / w) D u(q)).
  const Geometry& g = img.geometry();
  const std::size_t m = img.sample_count();
  auto f = img.samples();

  std::vector<double> px(m, 0.0), py(m, 0.0), qx(m, 0.0), qy(m, 0.0), prev_x(m), prev_y(m);
  std::vector<double> u(f.begin(), f.end());
  std::vector<double> best(u);
  double best_obj = tv_prox_objective(img, img, weight);
  double t = 1.0;

  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  auto primal_from = [&](const std::vector<double>& ax, const std::vector<double>& ay) {
    // u = f - w * D^T a
    std::vector<double> dta(m, 0.0);
    for (std::size_t b = 0; b < g.bands; ++b) {
      const std::size_t o = b * n;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t i = o + y * w + x;
          if (x + 1 < w) {
            dta[i] -= ax[i];
            dta[i + 1] += ax[i];
          }
          if (y + 1 < h) {
            dta[i] -= ay[i];
            dta[i + w] += ay[i];
          }
        }
    }
    for (std::size_t i = 0; i < m; ++i) dta[i] = f[i] - weight * dta[i];
    return dta;
  };

  const double scale = dual_step / weight;
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::vector<double> uq = primal_from(qx, qy);
    prev_x = px;
    prev_y = py;
    for (std::size_t b = 0; b < g.bands; ++b) {
      const std::size_t o = b * n;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t i = o + y * w + x;
          const double gx = x + 1 < w ? uq[i + 1] - uq[i] : 0.0;
          const double gy = y + 1 < h ? uq[i + w] - uq[i] : 0.0;
          double ax = qx[i] + scale * gx;
          double ay = qy[i] + scale * gy;
          const double r = std::hypot(ax, ay);
          if (r > 1.0) {
            ax /= r;
            ay /= r;
          }
          px[i] = ax;
          py[i] = ay;
        }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < m; ++i) {
      qx[i] = px[i] + beta * (px[i] - prev_x[i]);
      qy[i] = py[i] + beta * (py[i] - prev_y[i]);
    }
    t = t_next;

    u = primal_from(px, py);
    const RasterImage cand(g, u);
    const double obj = tv_prox_objective(cand, img, weight);
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }
  return img.with_samples(std::move(best));
}

}  // namespace vcr
