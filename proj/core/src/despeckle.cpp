#include <algorithm>
#include <cmath>

#include "vcr/error.hpp"
#include "vcr/tasks.hpp"

namespace vcr {

namespace {

void require_intensity(const RasterImage& y) {
  if (y.bands() != 1) throw GeometryError(detail::concat("despeckling expects one band, got ", y.bands()));
  for (double v : y.samples())
    if (v < 0.0) throw DomainError("despeckling needs a non-negative intensity image");
}

double gamma_term(const RasterImage& x, const RasterImage& y) {
  auto xs = x.samples();
  auto ys = y.samples();
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (y.valid(i)) s += std::log(xs[i]) + ys[i] / xs[i];
  return s;
}

double pointwise_gradient_step(double y, double v, double lambda, double rho, double floor, double step,
                               std::size_t steps, double x) {
  auto objective = [&](double t) { return lambda * (std::log(t) + y / t) + 0.5 * rho * (t - v) * (t - v); };
  double f = objective(x);
  for (std::size_t k = 0; k < steps; ++k) {
    const double g = lambda * (1.0 / x - y / (x * x)) + rho * (x - v);
    // Backtrack so the pointwise objective never rises.
    double s = step;
    while (s > 1e-300) {
      const double cand = std::max(floor, x - s * g);
      const double fc = objective(cand);
      if (fc <= f) {
        x = cand;
        f = fc;
        break;
      }
      s *= 0.5;
    }
  }
  return x;
}

}  // namespace

void validate(const DespeckleConfig& cfg) {
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) throw ConfigError("despeckle lambda must be > 0");
  if (!(cfg.floor > 0.0)) throw ConfigError("despeckle floor must be > 0");
  if (cfg.x_step == XStepMethod::gradient && cfg.gradient_steps < 1)
    throw ConfigError("gradient X-step needs at least one step");
  validate(cfg.solver);
}

std::pair<RasterImage, SolverReport> despeckle_pnp(const RasterImage& y, const DespeckleConfig& cfg) {
  validate(cfg);
  require_intensity(y);

  const SolverConfig& sc = cfg.solver;
  const double rho_max = effective_rho_max(sc);
  const std::size_t n = y.sample_count();
  auto ys = y.samples();

  std::vector<double> init(n);
  for (std::size_t i = 0; i < n; ++i) init[i] = std::max(ys[i], cfg.floor);
  RasterImage x = y.with_samples(std::move(init));
  double rho = sc.rho0;

  SolverReport report;
  report.stop_reason = StopReason::max_iterations;
  const bool tv = cfg.prior.kind() == PriorKind::tv;

  for (std::size_t it = 0; it < sc.max_iterations; ++it) {
    const double sigma2 = 1.0 / rho;
    const RasterImage v =
        denoise(cfg.prior, x, sc.noise_arg == NoiseArg::std_dev ? std::sqrt(sigma2) : sigma2);
    auto vs = v.samples();

    std::vector<double> next(n);
    double worst = 0.0;
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!y.valid(i)) {
        next[i] = std::max(vs[i], cfg.floor);
        continue;
      }
      if (cfg.x_step == XStepMethod::cubic) {
        const GammaProxPoint p = gamma_prox(ys[i], vs[i], cfg.lambda, rho, cfg.floor);
        next[i] = p.x;
        if (p.clamped)
          ++clamped;
        else
          worst = std::max(worst, p.cubic_residual);
      } else {
        next[i] = pointwise_gradient_step(ys[i], vs[i], cfg.lambda, rho, cfg.floor, sc.step, cfg.gradient_steps,
                                          std::max(vs[i], cfg.floor));
        const double r = std::abs(gamma_cubic(next[i], ys[i], vs[i], cfg.lambda, rho));
        worst = std::max(worst, r);
      }
    }

    double diff = 0.0, prev = 0.0, gap = 0.0;
    auto xs = x.samples();
    for (std::size_t i = 0; i < n; ++i) {
      diff += (next[i] - xs[i]) * (next[i] - xs[i]);
      prev += xs[i] * xs[i];
      gap += (next[i] - vs[i]) * (next[i] - vs[i]);
    }
    x = y.with_samples(std::move(next));

    ++report.iterations;
    report.traces["cubic_residual"].push_back(worst);
    report.traces["clamped"].push_back(static_cast<double>(clamped));
    report.traces["rho"].push_back(rho);
    report.primal_residual.push_back(std::sqrt(gap));
    if (tv) report.energy.push_back(cfg.lambda * gamma_term(x, y) + tv_value(v) + 0.5 * rho * gap);

    if (std::sqrt(diff) / std::max(std::sqrt(prev), 1.0) < sc.tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    rho = std::min(rho * sc.rho_growth, rho_max);
  }
  return {x, report};
}

std::pair<RasterImage, SolverReport> despeckle_aa_tv(const RasterImage& y, double lambda, const SolverConfig& cfg,
                                                     double tv_epsilon, double floor) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("despeckle lambda must be > 0");
  if (!(floor > 0.0)) throw ConfigError("despeckle floor must be > 0");
  if (!(tv_epsilon > 0.0)) throw ConfigError("smoothed TV needs epsilon > 0");
  validate(cfg);
  require_intensity(y);

  ProblemSpec spec;
  spec.fidelities.push_back(GammaFidelity{y, lambda});
  spec.regularizers.push_back(Regularizer{SmoothTvTerm{tv_epsilon}, 1.0});

  const std::size_t n = y.sample_count();
  std::vector<double> x(n);
  auto ys = y.samples();
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(ys[i], floor);
  auto clamp = [floor](std::vector<double>& v) {
    for (double& a : v) a = std::max(a, floor);
  };

  SolverReport report;
  report.stop_reason = StopReason::max_iterations;
  double energy = smooth_energy(spec, y.with_samples(x));
  double step = cfg.step;
  std::vector<double> cand(n);

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const RasterImage g = smooth_energy_gradient(spec, y.with_samples(x));
    auto gs = g.samples();
    double next_energy = energy;
    bool moved = false;
    while (step >= 1e-300) {
      for (std::size_t i = 0; i < n; ++i) cand[i] = x[i] - step * gs[i];
      clamp(cand);
      const double e = smooth_energy(spec, y.with_samples(cand));
      if (e <= energy) {
        next_energy = e;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    ++report.iterations;
    if (!moved) {
      report.energy.push_back(energy);
      report.traces["step"].push_back(0.0);
      report.stop_reason = StopReason::tolerance;
      break;
    }
    double diff = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diff += (cand[i] - x[i]) * (cand[i] - x[i]);
      prev += x[i] * x[i];
    }
    x.swap(cand);
    energy = next_energy;
    report.energy.push_back(energy);
    report.traces["step"].push_back(step);
    if (std::sqrt(diff) / std::max(std::sqrt(prev), 1.0) < cfg.tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    step = std::min(2.0 * step, cfg.step);
  }
  return {y.with_samples(std::move(x)), report};
}

}  // namespace vcr
