#include "vcr/priors.hpp"

#include <algorithm>
#include <cmath>

#include "vcr/error.hpp"
#include "vcr/operators.hpp"
#include "vcr/plugin.hpp"
#include "vcr/solvers.hpp"

namespace vcr {

const char* to_string(PriorKind kind) noexcept {
  switch (kind) {
    case PriorKind::tv: return "tv";
    case PriorKind::laplacian_quadratic: return "laplacian-quadratic";
    case PriorKind::l1_synthesis: return "l1-synthesis";
    case PriorKind::median: return "median";
    case PriorKind::nlm: return "nlm";
    case PriorKind::external: return "external";
  }
  return "unknown";
}

PriorHandle::PriorHandle(TvPrior p) : params_(p) {
  if (p.iterations < 1) throw ConfigError("tv prior needs iterations >= 1");
  if (!(p.dual_step > 0.0 && p.dual_step <= 0.25)) throw ConfigError("tv dual step must lie in (0, 1/4]");
  if (!(p.strength >= 0.0)) throw ConfigError("tv strength must be >= 0");
}

PriorHandle::PriorHandle(LaplacianPrior p) : params_(p) {
  if (p.cg_iterations < 1) throw ConfigError("laplacian prior needs cg_iterations >= 1");
  if (!(p.strength >= 0.0)) throw ConfigError("laplacian strength must be >= 0");
}

PriorHandle::PriorHandle(L1SynthesisPrior p) : params_(std::move(p)) {
  const auto& q = std::get<L1SynthesisPrior>(params_);
  if (q.iterations < 1) throw ConfigError("l1-synthesis prior needs iterations >= 1");
  if (!(q.strength >= 0.0)) throw ConfigError("l1-synthesis strength must be >= 0");
}

PriorHandle::PriorHandle(MedianPrior p) : params_(p) {
  if (p.radius < 1) throw ConfigError("median radius must be >= 1");
}

PriorHandle::PriorHandle(NlmPrior p) : params_(p) {
  if (p.patch_radius < 1 || p.search_radius < 1) throw ConfigError("nlm radii must be >= 1");
  if (!(p.h_factor > 0.0)) throw ConfigError("nlm h factor must be > 0");
}

PriorHandle::PriorHandle(ExternalPrior p) : params_(p) {
  if (p.command.empty()) throw ConfigError("external prior needs a non-empty command");
  if (p.timeout.count() <= 0) throw ConfigError("external prior timeout must be positive");
  external_ = std::make_shared<ExternalDenoiser>(p.command, p.timeout);
}

PriorKind PriorHandle::kind() const noexcept { return static_cast<PriorKind>(params_.index()); }

bool PriorHandle::is_explicit() const noexcept {
  const PriorKind k = kind();
  return k == PriorKind::tv || k == PriorKind::laplacian_quadratic || k == PriorKind::l1_synthesis;
}

namespace {

RasterImage laplacian_prox(const RasterImage& v, double tau, std::size_t cg_iterations) {
  if (tau == 0.0) return v;
  SolverConfig cfg;
  cfg.cg_max_iterations = cg_iterations;
  cfg.cg_tolerance = 1e-12;
  auto normal = [tau](const RasterImage& u) { return lincomb(1.0, u, tau, laplacian_apply(laplacian_apply(u))); };
  auto [u, report] = conjugate_gradient(normal, v, v, cfg);
  return v.with_samples(std::vector<double>(u.samples().begin(), u.samples().end()));
}

RasterImage l1_synthesis_prox(const RasterImage& v, const L1SynthesisPrior& p, double tau) {
  const BandMatrix& d = p.dictionary;
  const Geometry& g = v.geometry();
  if (d.rows() != g.bands) {
    throw GeometryError(detail::concat("l1-synthesis dictionary has ", d.rows(), " rows for a ", g.bands,
                                       "-band raster"));
  }
  const std::size_t n = g.pixel_count();
  auto s = v.samples();
  std::vector<double> out(s.size());
  std::vector<double> spectrum(g.bands);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t b = 0; b < g.bands; ++b) spectrum[b] = s[b * n + q];
    const SparseCode code = ista_sparse_code(spectrum, d, tau, p.iterations);
    for (std::size_t b = 0; b < g.bands; ++b) {
      double acc = 0.0;
      for (std::size_t a = 0; a < d.cols(); ++a) acc += d(b, a) * code.coefficients[a];
      out[b * n + q] = acc;
    }
  }
  return v.with_samples(std::move(out));
}

}  // namespace

RasterImage prox(const PriorHandle& prior, const RasterImage& img, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("prox weight must be finite and >= 0");
  switch (prior.kind()) {
    case PriorKind::tv: {
      const auto& p = std::get<TvPrior>(prior.params());
      return tv_prox(img, tau, p.iterations, p.dual_step);
    }
    case PriorKind::laplacian_quadratic:
      return laplacian_prox(img, tau, std::get<LaplacianPrior>(prior.params()).cg_iterations);
    case PriorKind::l1_synthesis:
      return l1_synthesis_prox(img, std::get<L1SynthesisPrior>(prior.params()), tau);
    default:
      throw ConfigError(detail::concat("prior kind ", to_string(prior.kind()), " has no proximal map"));
  }
}

bool has_value(const PriorHandle& prior, std::size_t bands) {
  if (!prior.is_explicit()) return false;
  if (prior.kind() != PriorKind::l1_synthesis) return true;
  const BandMatrix& d = std::get<L1SynthesisPrior>(prior.params()).dictionary;
  if (d.rows() != d.cols() || d.rows() != bands) return false;
  const BandMatrix gram = d.transpose() * d;
  const BandMatrix eye = BandMatrix::identity(d.rows());
  for (std::size_t i = 0; i < gram.entries().size(); ++i)
    if (std::abs(gram.entries()[i] - eye.entries()[i]) > 1e-10) return false;
  return true;
}

double prior_value(const PriorHandle& prior, const RasterImage& img) {
  switch (prior.kind()) {
    case PriorKind::tv:
      return tv_value(img);
    case PriorKind::laplacian_quadratic: {
      const RasterImage q = laplacian_apply(img);
      return 0.5 * dot(q, q);
    }
    case PriorKind::l1_synthesis: {
      const BandMatrix& d = std::get<L1SynthesisPrior>(prior.params()).dictionary;
      const Geometry& g = img.geometry();
      if (!has_value(prior, g.bands)) {
        throw ConfigError("l1-synthesis value needs a square orthonormal dictionary matching the band count");
      }
      const std::size_t n = g.pixel_count();
      auto s = img.samples();
      double total = 0.0;
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t a = 0; a < d.cols(); ++a) {
          double c = 0.0;
          for (std::size_t b = 0; b < g.bands; ++b) c += d(b, a) * s[b * n + q];
          total += std::abs(c);
        }
      return total;
    }
    default:
      throw ConfigError(detail::concat("prior kind ", to_string(prior.kind()), " has no closed-form value"));
  }
}

RasterImage denoise(const PriorHandle& prior, const RasterImage& img, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("denoiser sigma must be finite and >= 0");
  switch (prior.kind()) {
    case PriorKind::tv: {
      const auto& p = std::get<TvPrior>(prior.params());
      return tv_prox(img, p.strength * sigma * sigma, p.iterations, p.dual_step);
    }
    case PriorKind::laplacian_quadratic: {
      const auto& p = std::get<LaplacianPrior>(prior.params());
      return laplacian_prox(img, p.strength * sigma * sigma, p.cg_iterations);
    }
    case PriorKind::l1_synthesis: {
      const auto& p = std::get<L1SynthesisPrior>(prior.params());
      return l1_synthesis_prox(img, p, p.strength * sigma * sigma);
    }
    case PriorKind::median:
      return median_filter(img, std::get<MedianPrior>(prior.params()).radius);
    case PriorKind::nlm: {
      if (sigma == 0.0) return img;
      const auto& p = std::get<NlmPrior>(prior.params());
      const double patch_pixels = static_cast<double>((2 * p.patch_radius + 1) * (2 * p.patch_radius + 1));
      return nlm_filter(img, p.patch_radius, p.search_radius, p.h_factor * sigma * std::sqrt(patch_pixels));
    }
    case PriorKind::external:
      return prior.external()->denoise(img, sigma);
  }
  throw ConfigError("unknown prior kind");
}

// ---- stencils -----------------------------------------------------------------------------

RasterImage laplacian_apply(const RasterImage& img) {
  const Geometry& g = img.geometry();
  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  auto u = img.samples();
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t b = 0; b < g.bands; ++b) {
    const std::size_t o = b * n;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = o + y * w + x;
        // Mirrored neighbours outside the grid equal the centre and contribute nothing.
        double s = 0.0;
        if (x > 0) s += u[i - 1] - u[i];
        if (x + 1 < w) s += u[i + 1] - u[i];
        if (y > 0) s += u[i - w] - u[i];
        if (y + 1 < h) s += u[i + w] - u[i];
        out[i] = s;
      }
  }
  return img.with_samples(std::move(out));
}

RasterImage median_filter(const RasterImage& img, std::size_t radius) {
  if (radius < 1) throw ConfigError("median radius must be >= 1");
  const Geometry& g = img.geometry();
  const std::size_t w = g.width, h = g.height, n = g.pixel_count();
  const auto r = static_cast<std::ptrdiff_t>(radius);
  auto u = img.samples();
  std::vector<double> out(u.size());
  std::vector<double> window;
  window.reserve((2 * radius + 1) * (2 * radius + 1));
  for (std::size_t b = 0; b < g.bands; ++b) {
    const double* src = u.data() + b * n;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        window.clear();
        for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
          for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            const std::size_t yy = reflect_index(static_cast<std::ptrdiff_t>(y) + dy, h);
            const std::size_t xx = reflect_index(static_cast<std::ptrdiff_t>(x) + dx, w);
            window.push_back(src[yy * w + xx]);
          }
        auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
        std::nth_element(window.begin(), mid, window.end());
        out[b * n + y * w + x] = *mid;
      }
  }
  return img.with_samples(std::move(out));
}

RasterImage nlm_filter(const RasterImage& img, std::size_t patch_radius, std::size_t search_radius, double h) {
  if (!(h > 0.0)) return img;
  const Geometry& g = img.geometry();
  const std::size_t w = g.width, ht = g.height, n = g.pixel_count();
  const auto pr = static_cast<std::ptrdiff_t>(patch_radius);
  const auto sr = static_cast<std::ptrdiff_t>(search_radius);
  const double inv_h2 = 1.0 / (h * h);
  auto u = img.samples();
  std::vector<double> out(u.size());
  for (std::size_t b = 0; b < g.bands; ++b) {
    const double* src = u.data() + b * n;
    auto at = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
      return src[reflect_index(y, ht) * w + reflect_index(x, w)];
    };
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(ht); ++y)
      for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(w); ++x) {
        double wsum = 0.0, acc = 0.0;
        for (std::ptrdiff_t sy = std::max<std::ptrdiff_t>(0, y - sr);
             sy <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(ht) - 1, y + sr); ++sy)
          for (std::ptrdiff_t sx = std::max<std::ptrdiff_t>(0, x - sr);
               sx <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1, x + sr); ++sx) {
            double d2 = 0.0;
            for (std::ptrdiff_t py = -pr; py <= pr; ++py)
              for (std::ptrdiff_t px = -pr; px <= pr; ++px) {
                const double diff = at(x + px, y + py) - at(sx + px, sy + py);
                d2 += diff * diff;
              }
            const double wt = std::exp(-d2 * inv_h2);
            wsum += wt;
            acc += wt * src[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)];
          }
        out[b * n + static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = acc / wsum;
      }
  }
  return img.with_samples(std::move(out));
}

}  // namespace vcr
