#include <algorithm>
#include <cmath>

#include "vcr/error.hpp"
#include "vcr/tasks.hpp"

namespace vcr {

void validate(const HsiDenoiseConfig& cfg) {
  if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau)) throw ConfigError("hsi prior weight tau must be >= 0");
  if (cfg.lambda_s && !(*cfg.lambda_s >= 0.0)) throw ConfigError("sparse-noise weight must be >= 0");
  if (cfg.beta && !(*cfg.beta >= 0.0)) throw ConfigError("gaussian-noise weight beta must be >= 0");
  validate(cfg.solver);
}

std::pair<HsiDecomposition, SolverReport> hsi_denoise_pnp(const RasterImage& y, const HsiDenoiseConfig& cfg) {
  validate(cfg);
  const SolverConfig& sc = cfg.solver;
  const std::size_t m = y.sample_count();
  auto ys = y.samples();

  std::vector<double> x(ys.begin(), ys.end());
  std::vector<double> z = x;
  std::vector<double> s(m, 0.0), nz(m, 0.0), w(m, 0.0);
  SolverReport report;
  report.stop_reason = StopReason::max_iterations;

  auto finish = [&] {
    return std::pair{HsiDecomposition{y.with_samples(x), y.with_samples(s), y.with_samples(nz)}, report};
  };

  if (cfg.tau == 0.0 && !cfg.lambda_s && !cfg.beta) {
    report.stop_reason = StopReason::tolerance;
    return finish();
  }

  const double rho_max = effective_rho_max(sc);
  double rho = sc.rho0;
  for (std::size_t it = 0; it < sc.max_iterations; ++it) {
    // Joint minimizer of the augmented Lagrangian over (X, S, N) for fixed Z - W.
    // Eliminating N scales the fidelity by kappa; eliminating X leaves a soft-threshold in S.
    std::vector<double> x_next(m);
    const double kappa = cfg.beta ? *cfg.beta / (1.0 + *cfg.beta) : 1.0;
    const double c = cfg.tau == 0.0 ? 0.0 : 2.0 * rho;
    for (std::size_t i = 0; i < m; ++i) {
      const double t = cfg.tau == 0.0 ? 0.0 : z[i] - w[i];
      if (cfg.lambda_s) {
        s[i] = c == 0.0 || kappa == 0.0 ? 0.0 : soft_threshold(ys[i] - t, *cfg.lambda_s * (kappa + c) / (c * kappa));
      }
      x_next[i] = c == 0.0 ? ys[i] - s[i] : (kappa * (ys[i] - s[i]) + c * t) / (kappa + c);
      if (cfg.beta) nz[i] = (ys[i] - x_next[i] - s[i]) / (1.0 + *cfg.beta);
    }

    std::vector<double> z_next;
    if (cfg.tau == 0.0) {
      z_next = x_next;
    } else {
      std::vector<double> shifted(m);
      for (std::size_t i = 0; i < m; ++i) shifted[i] = x_next[i] + w[i];
      const double sigma2 = cfg.tau / (2.0 * rho);
      const RasterImage in = y.with_samples(std::move(shifted));
      const RasterImage out = cfg.prior.is_explicit()
                                  ? prox(cfg.prior, in, sigma2)
                                  : denoise(cfg.prior, in,
                                            sc.noise_arg == NoiseArg::std_dev ? std::sqrt(sigma2) : sigma2);
      z_next.assign(out.samples().begin(), out.samples().end());
    }

    double primal = 0.0, dual = 0.0, fid = 0.0, diff = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double gap = x_next[i] - z_next[i];
      primal += gap * gap;
      dual += (z_next[i] - z[i]) * (z_next[i] - z[i]);
      const double r = ys[i] - x_next[i] - s[i] - nz[i];
      fid += r * r;
      diff += (x_next[i] - x[i]) * (x_next[i] - x[i]);
      prev += x[i] * x[i];
      w[i] += gap;
    }
    const double change = std::sqrt(diff) / std::max(std::sqrt(prev), 1.0);
    x.swap(x_next);
    z.swap(z_next);

    ++report.iterations;
    report.primal_residual.push_back(std::sqrt(primal));
    report.dual_residual.push_back(2.0 * rho * std::sqrt(dual));
    report.traces["primal"].push_back(std::sqrt(primal));
    report.traces["dual"].push_back(2.0 * rho * std::sqrt(dual));
    report.traces["fidelity"].push_back(std::sqrt(fid));
    report.traces["change"].push_back(change);
    report.traces["rho"].push_back(rho);
    double energy = 0.5 * fid;
    if (cfg.lambda_s)
      for (double v : s) energy += *cfg.lambda_s * std::abs(v);
    if (cfg.beta)
      for (double v : nz) energy += 0.5 * *cfg.beta * v * v;
    if (cfg.tau > 0.0 && has_value(cfg.prior, y.geometry().bands)) energy += cfg.tau * prior_value(cfg.prior, y.with_samples(x));
    report.energy.push_back(energy);

    double xn = 0.0;
    for (double v : x) xn += v * v;
    if (change < sc.tolerance && std::sqrt(primal) / std::max(std::sqrt(xn), 1.0) < sc.tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    const double rho_next = std::min(rho * sc.rho_growth, rho_max);
    if (rho_next != rho) {
      for (double& wi : w) wi *= rho / rho_next;
      rho = rho_next;
    }
  }
  return finish();
}

}  // namespace vcr
