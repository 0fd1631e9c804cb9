#include "vcr/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vcr/error.hpp"
#include "vcr/rng.hpp"

namespace vcr {

const char* to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::gd: return "gd";
    case Algorithm::hqs: return "hqs";
    case Algorithm::admm: return "admm";
    case Algorithm::cg: return "cg";
  }
  return "unknown";
}

const char* to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iterations: return "max-iterations";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

const char* to_string(NoiseArg n) noexcept { return n == NoiseArg::std_dev ? "std" : "var"; }

void validate(const SolverConfig& cfg) {
  if (cfg.max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("stop tolerance must be > 0");
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) throw ConfigError("gradient step must be > 0");
  if (!(cfg.rho0 > 0.0) || !std::isfinite(cfg.rho0)) throw ConfigError("rho0 must be > 0");
  if (!(cfg.rho_growth >= 1.0) || !std::isfinite(cfg.rho_growth)) throw ConfigError("rho growth must be >= 1");
  if (cfg.rho_max != 0.0 && !(cfg.rho_max >= cfg.rho0)) throw ConfigError("rho max must be >= rho0");
  if (cfg.cg_max_iterations < 1) throw ConfigError("cg max iterations must be >= 1");
  if (!(cfg.cg_tolerance > 0.0)) throw ConfigError("cg tolerance must be > 0");
}

double effective_rho_max(const SolverConfig& cfg) noexcept {
  return cfg.rho_max > 0.0 ? cfg.rho_max : 1e6 * cfg.rho0;
}

// ---- problem evaluation -------------------------------------------------------------------

namespace {

std::vector<double> masked_residual(const QuadraticFidelity& f, const RasterImage& x) {
  const RasterImage ax = apply(f.op, x);
  auto a = ax.samples();
  auto y = f.observation.samples();
  const std::size_t n = f.observation.pixel_count();
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f.observation.valid(i % n) ? a[i] - y[i] : 0.0;
  return r;
}

double relative_change(std::span<const double> next, std::span<const double> prev) {
  double d = 0.0, p = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    d += (next[i] - prev[i]) * (next[i] - prev[i]);
    p += prev[i] * prev[i];
  }
  return std::sqrt(d) / std::max(std::sqrt(p), 1.0);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

void validate(const ProblemSpec& spec, const Geometry& x_geometry, bool splitting) {
  if (spec.fidelities.empty()) throw ConfigError("problem needs at least one fidelity term");
  for (const auto& fid : spec.fidelities) {
    if (const auto* q = std::get_if<QuadraticFidelity>(&fid)) {
      if (!(q->weight >= 0.0)) throw ConfigError("fidelity weights must be >= 0");
      require_same_geometry(q->op.input_geometry(), x_geometry, "fidelity operator input");
      require_same_geometry(q->op.output_geometry(), q->observation.geometry(), "fidelity observation");
    } else {
      const auto& g = std::get<GammaFidelity>(fid);
      if (!(g.weight >= 0.0)) throw ConfigError("fidelity weights must be >= 0");
      require_same_geometry(g.observation.geometry(), x_geometry, "gamma observation");
      for (double v : g.observation.samples())
        if (v < 0.0) throw DomainError("gamma fidelity needs a non-negative observation");
    }
  }
  for (const auto& reg : spec.regularizers) {
    if (!(reg.weight >= 0.0)) throw ConfigError("regularizer weights must be >= 0");
    if (std::holds_alternative<PriorTerm>(reg.term)) {
      throw ConfigError(
          "a non-differentiable prior cannot sit in the regularizer list; bind it to the split variable instead");
    }
    if (const auto* tv = std::get_if<SmoothTvTerm>(&reg.term); tv && !(tv->epsilon > 0.0)) {
      throw ConfigError("smoothed TV needs epsilon > 0");
    }
  }
  if (splitting) {
    if (!spec.split_weight) throw ConfigError("splitting solvers need a split weight (lambda)");
    if (!(*spec.split_weight >= 0.0)) throw ConfigError("split weight must be >= 0");
  }
}

double smooth_energy(const ProblemSpec& spec, const RasterImage& x) {
  double e = 0.0;
  for (const auto& fid : spec.fidelities) {
    if (const auto* q = std::get_if<QuadraticFidelity>(&fid)) {
      if (q->weight == 0.0) continue;
      const auto r = masked_residual(*q, x);
      e += 0.5 * q->weight * std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    } else {
      const auto& g = std::get<GammaFidelity>(fid);
      if (g.weight == 0.0) continue;
      auto xs = x.samples();
      auto ys = g.observation.samples();
      const std::size_t n = x.pixel_count();
      double s = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!g.observation.valid(i % n)) continue;
        if (!(xs[i] > 0.0)) return std::numeric_limits<double>::infinity();
        s += std::log(xs[i]) + ys[i] / xs[i];
      }
      e += g.weight * s;
    }
  }
  for (const auto& reg : spec.regularizers) {
    if (reg.weight == 0.0) continue;
    if (const auto* tv = std::get_if<SmoothTvTerm>(&reg.term)) {
      e += reg.weight * smooth_tv_value(x, tv->epsilon);
    } else if (std::holds_alternative<LaplacianTerm>(reg.term)) {
      const RasterImage q = laplacian_apply(x);
      e += 0.5 * reg.weight * dot(q, q);
    } else {
      throw ConfigError("prior term has no smooth energy");
    }
  }
  return e;
}

RasterImage smooth_energy_gradient(const ProblemSpec& spec, const RasterImage& x) {
  std::vector<double> g(x.sample_count(), 0.0);
  auto add = [&g](double w, const RasterImage& t) {
    auto s = t.samples();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * s[i];
  };
  for (const auto& fid : spec.fidelities) {
    if (const auto* q = std::get_if<QuadraticFidelity>(&fid)) {
      if (q->weight == 0.0) continue;
      add(q->weight, apply_adjoint(q->op, RasterImage(q->observation.geometry(), masked_residual(*q, x))));
    } else {
      const auto& gf = std::get<GammaFidelity>(fid);
      if (gf.weight == 0.0) continue;
      auto xs = x.samples();
      auto ys = gf.observation.samples();
      const std::size_t n = x.pixel_count();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!gf.observation.valid(i % n)) continue;
        if (!(xs[i] > 0.0)) throw DomainError("gamma fidelity gradient needs x > 0");
        g[i] += gf.weight * (1.0 / xs[i] - ys[i] / (xs[i] * xs[i]));
      }
    }
  }
  for (const auto& reg : spec.regularizers) {
    if (reg.weight == 0.0) continue;
    if (const auto* tv = std::get_if<SmoothTvTerm>(&reg.term)) {
      add(reg.weight, smooth_tv_gradient(x, tv->epsilon));
    } else if (std::holds_alternative<LaplacianTerm>(reg.term)) {
      add(reg.weight, laplacian_apply(laplacian_apply(x)));
    } else {
      throw ConfigError("prior term has no gradient");
    }
  }
  return x.with_samples(std::move(g));
}

double finite_difference_gradient_check(const ProblemSpec& spec, const RasterImage& x, double h,
                                        std::uint64_t seed) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be > 0");
  validate(spec, x.geometry(), false);
  const RasterImage grad = smooth_energy_gradient(spec, x);
  const std::size_t n = x.sample_count();

  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const std::size_t count = n <= 32 ? n : std::max<std::size_t>(32, n / 4);
  const CounterRng rng(seed);
  for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform(i) * static_cast<double>(n - i));
    std::swap(coords[i], coords[std::min(j, n - 1)]);
  }
  coords.resize(count);

  std::vector<double> buf(x.samples().begin(), x.samples().end());
  double worst = 0.0;
  for (std::size_t c : coords) {
    const double orig = buf[c];
    buf[c] = orig + h;
    const double ep = smooth_energy(spec, x.with_samples(buf));
    buf[c] = orig - h;
    const double em = smooth_energy(spec, x.with_samples(buf));
    buf[c] = orig;
    const double fd = (ep - em) / (2.0 * h);
    const double an = grad.samples()[c];
    worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
  }
  return worst;
}

// ---- gradient descent -------------------------------------------------------------------

std::pair<RasterImage, SolverReport> gradient_descent(const ProblemSpec& spec, const RasterImage& x0,
                                                      const SolverConfig& cfg, const Projection& project) {
  validate(cfg);
  validate(spec, x0.geometry(), false);

  SolverReport report;
  RasterImage x = x0;
  double energy = smooth_energy(spec, x);
  double step = cfg.step;
  int increases = 0;
  report.stop_reason = StopReason::max_iterations;
  std::vector<double> cand(x.sample_count());

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const RasterImage g = smooth_energy_gradient(spec, x);
    auto gs = g.samples();
    auto xs = x.samples();
    double next_energy = 0.0;
    while (true) {
      for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = xs[i] - step * gs[i];
      if (project) project(cand);
      next_energy = all_finite(cand) ? smooth_energy(spec, x.with_samples(cand))
                                     : std::numeric_limits<double>::infinity();
      if (!cfg.monotone_step || next_energy <= energy) break;
      step *= 0.5;
      if (step < 1e-300) {
        next_energy = energy;
        cand.assign(xs.begin(), xs.end());
        break;
      }
    }
    if (!std::isfinite(next_energy)) {
      report.stop_reason = StopReason::diverged;
      break;
    }
    increases = next_energy > energy ? increases + 1 : 0;
    const double change = relative_change(cand, xs);
    x = x.with_samples(cand);
    energy = next_energy;
    ++report.iterations;
    report.energy.push_back(energy);
    report.traces["step"].push_back(step);
    if (increases >= 5) {
      report.stop_reason = StopReason::diverged;
      break;
    }
    if (change < cfg.tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
  }
  return {x, report};
}

// ---- splitting ------------------------------------------------------------------------------

GammaProxPoint gamma_prox(double y, double v, double lambda, double penalty, double floor) {
  if (!(floor > 0.0)) throw ConfigError("gamma prox floor must be > 0");
  if (!(lambda >= 0.0) || !(penalty >= 0.0)) throw ConfigError("gamma prox weights must be >= 0");
  if (!(y >= 0.0)) throw DomainError("gamma prox needs y >= 0");

  auto cubic = [&](double x) { return gamma_cubic(x, y, v, lambda, penalty); };
  auto dcubic = [&](double x) { return 3.0 * penalty * x * x - 2.0 * penalty * v * x + lambda; };
  auto objective = [&](double x) {
    return lambda * (std::log(x) + y / x) + 0.5 * penalty * (x - v) * (x - v);
  };

  if (lambda == 0.0) {
    const double x = std::max(v, floor);
    return {x, std::abs(cubic(x)), x != v};
  }

  // Upper bound on positive roots (Cauchy bound of the monic cubic).
  double upper;
  if (penalty > 0.0) {
    upper = 1.0 + std::max({std::abs(v), lambda / penalty, lambda * y / penalty});
  } else {
    upper = 1.0 + y;
  }
  upper = std::max(upper, 2.0 * floor);

  std::vector<double> knots{floor};
  if (penalty > 0.0) {
    const double disc = 4.0 * penalty * penalty * v * v - 12.0 * penalty * lambda;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      for (double c : {(2.0 * penalty * v - sq) / (6.0 * penalty), (2.0 * penalty * v + sq) / (6.0 * penalty)})
        if (c > floor && c < upper) knots.push_back(c);
    }
  }
  knots.push_back(upper);

  auto bracketed_root = [&](double a, double b) {
    double fa = cubic(a);
    const double fb = cubic(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    double x = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
      const double f = cubic(x);
      if (f == 0.0) return x;
      if ((f < 0.0) == (fa < 0.0)) {
        a = x;
        fa = f;
      } else {
        b = x;
      }
      const double d = dcubic(x);
      double next = d != 0.0 ? x - f / d : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
        x = next;
        break;
      }
      x = next;
      if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    }
    return x;
  };

  GammaProxPoint best{floor, std::abs(cubic(floor)), true};
  double best_obj = objective(floor);
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    const double fa = cubic(a), fb = cubic(b);
    if ((fa > 0.0 && fb > 0.0) || (fa < 0.0 && fb < 0.0)) continue;
    const double root = bracketed_root(a, b);
    const double obj = objective(root);
    if (obj < best_obj || (best.clamped && obj <= best_obj)) {
      best_obj = obj;
      best = {root, std::abs(cubic(root)), false};
    }
  }
  return best;
}

double gamma_cubic(double x, double y, double v, double lambda, double penalty) noexcept {
  return penalty * x * x * x - penalty * v * x * x + lambda * x - lambda * y;
}

namespace {

struct XStep {
  enum class Kind { quadratic, gamma } kind;
};

XStep classify(const ProblemSpec& spec) {
  bool any_gamma = false, any_quadratic = false;
  for (const auto& f : spec.fidelities) {
    if (std::holds_alternative<GammaFidelity>(f))
      any_gamma = true;
    else
      any_quadratic = true;
  }
  const bool smooth_tv = std::any_of(spec.regularizers.begin(), spec.regularizers.end(),
                                     [](const Regularizer& r) { return std::holds_alternative<SmoothTvTerm>(r.term); });
  if (any_gamma) {
    if (any_quadratic || spec.fidelities.size() != 1 || !spec.regularizers.empty()) {
      throw ConfigError("splitting with a gamma fidelity supports exactly one fidelity and no extra regularizers");
    }
    return {XStep::Kind::gamma};
  }
  if (smooth_tv) throw ConfigError("splitting X-step cannot include a smoothed TV term; bind TV to the split variable");
  return {XStep::Kind::quadratic};
}

constexpr double kGammaFloor = 1e-6;

// argmin_X f(X) + regs(X) + rho ||X - target||^2 (rho = 0: f alone).
RasterImage solve_x_step(const ProblemSpec& spec, XStep kind, const RasterImage& target, const RasterImage& warm,
                         double rho, const SolverConfig& cfg, SolverReport& report) {
  if (kind.kind == XStep::Kind::gamma) {
    const auto& g = std::get<GammaFidelity>(spec.fidelities.front());
    auto ys = g.observation.samples();
    auto ts = target.samples();
    const std::size_t n = target.pixel_count();
    std::vector<double> out(ts.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!g.observation.valid(i % n)) {
        out[i] = rho > 0.0 ? ts[i] : warm.samples()[i];
        continue;
      }
      const GammaProxPoint p = gamma_prox(ys[i], ts[i], g.weight, 2.0 * rho, kGammaFloor);
      out[i] = p.x;
      if (!p.clamped) worst = std::max(worst, p.cubic_residual);
    }
    report.traces["cubic_residual"].push_back(worst);
    return target.with_samples(std::move(out));
  }

  auto normal = [&](const RasterImage& u) {
    std::vector<double> acc(u.sample_count(), 0.0);
    auto add = [&acc](double w, const RasterImage& t) {
      auto s = t.samples();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * s[i];
    };
    for (const auto& fid : spec.fidelities) {
      const auto& q = std::get<QuadraticFidelity>(fid);
      if (q.weight == 0.0) continue;
      RasterImage au = apply(q.op, u);
      if (q.observation.has_mask()) {
        std::vector<double> m(au.samples().begin(), au.samples().end());
        const std::size_t n = q.observation.pixel_count();
        for (std::size_t i = 0; i < m.size(); ++i)
          if (!q.observation.valid(i % n)) m[i] = 0.0;
        au = RasterImage(au.geometry(), std::move(m));
      }
      add(q.weight, apply_adjoint(q.op, au));
    }
    for (const auto& reg : spec.regularizers)
      if (reg.weight != 0.0) add(reg.weight, laplacian_apply(laplacian_apply(u)));
    auto us = u.samples();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += 2.0 * rho * us[i];
    return RasterImage(u.geometry(), std::move(acc));
  };

  std::vector<double> rhs(target.sample_count(), 0.0);
  for (const auto& fid : spec.fidelities) {
    const auto& q = std::get<QuadraticFidelity>(fid);
    if (q.weight == 0.0) continue;
    std::vector<double> y(q.observation.samples().begin(), q.observation.samples().end());
    const std::size_t n = q.observation.pixel_count();
    for (std::size_t i = 0; i < y.size(); ++i)
      if (!q.observation.valid(i % n)) y[i] = 0.0;
    const RasterImage aty = apply_adjoint(q.op, RasterImage(q.observation.geometry(), std::move(y)));
    auto s = aty.samples();
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += q.weight * s[i];
  }
  auto ts = target.samples();
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += 2.0 * rho * ts[i];

  const RasterImage b(target.geometry(), std::move(rhs));
  auto [x, cg_report] = conjugate_gradient(normal, b, RasterImage(warm.geometry(), std::vector<double>(
                                                                                       warm.samples().begin(),
                                                                                       warm.samples().end())),
                                           cfg);
  report.traces["cg_iterations"].push_back(static_cast<double>(cg_report.iterations));
  return target.with_samples(std::vector<double>(x.samples().begin(), x.samples().end()));
}

std::pair<RasterImage, SolverReport> split_solve(const ProblemSpec& spec, const RasterImage& x0,
                                                 const SolverConfig& cfg, const PriorHandle& prior, bool admm) {
  validate(cfg);
  validate(spec, x0.geometry(), true);
  const XStep kind = classify(spec);
  const double lambda = *spec.split_weight;
  const double rho_max = effective_rho_max(cfg);

  SolverReport report;
  report.stop_reason = StopReason::max_iterations;

  if (lambda == 0.0) {
    // No coupling: the X-step is f alone and V simply copies it.
    RasterImage x = solve_x_step(spec, kind, x0, x0, 0.0, cfg, report);
    report.iterations = 1;
    report.primal_residual.push_back(0.0);
    report.dual_residual.push_back(0.0);
    report.energy.push_back(smooth_energy(spec, x));
    report.stop_reason = StopReason::tolerance;
    return {x, report};
  }

  RasterImage x = x0;
  RasterImage v = x0;
  std::vector<double> w(x0.sample_count(), 0.0);
  double rho = cfg.rho0;

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const std::size_t m = x.sample_count();
    std::vector<double> target(m);
    {
      auto vs = v.samples();
      for (std::size_t i = 0; i < m; ++i) target[i] = vs[i] - w[i];
    }
    const RasterImage x_next = solve_x_step(spec, kind, x0.with_samples(target), x, rho, cfg, report);

    std::vector<double> shifted(m);
    {
      auto xs = x_next.samples();
      for (std::size_t i = 0; i < m; ++i) shifted[i] = xs[i] + w[i];
    }
    const double sigma2 = lambda / (2.0 * rho);
    const RasterImage input = x0.with_samples(shifted);
    const RasterImage v_next =
        prior.is_explicit()
            ? prox(prior, input, sigma2)
            : denoise(prior, input, cfg.noise_arg == NoiseArg::std_dev ? std::sqrt(sigma2) : sigma2);

    auto xs = x_next.samples();
    auto vs = v_next.samples();
    double primal = 0.0, dual = 0.0, xn = 0.0;
    auto vprev = v.samples();
    for (std::size_t i = 0; i < m; ++i) {
      primal += (xs[i] - vs[i]) * (xs[i] - vs[i]);
      dual += (vs[i] - vprev[i]) * (vs[i] - vprev[i]);
      xn += xs[i] * xs[i];
    }
    primal = std::sqrt(primal);
    dual = 2.0 * rho * std::sqrt(dual);
    const double change = relative_change(xs, x.samples());

    if (admm)
      for (std::size_t i = 0; i < m; ++i) w[i] += xs[i] - vs[i];

    x = x_next;
    v = v_next;
    ++report.iterations;
    report.primal_residual.push_back(primal);
    report.dual_residual.push_back(dual);
    report.traces["rho"].push_back(rho);
    if (has_value(prior, x.geometry().bands)) report.energy.push_back(splitting_energy(spec, x, prior));

    if (change < cfg.tolerance && primal / std::max(std::sqrt(xn), 1.0) < cfg.tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    const double rho_next = std::min(rho * cfg.rho_growth, rho_max);
    if (rho_next != rho) {
      // Scaled multiplier follows the penalty so the unscaled one is unchanged.
      for (double& wi : w) wi *= rho / rho_next;
      rho = rho_next;
    }
  }
  return {x, report};
}

}  // namespace

std::pair<RasterImage, SolverReport> hqs_solve(const ProblemSpec& spec, const RasterImage& x0,
                                               const SolverConfig& cfg, const PriorHandle& prior) {
  return split_solve(spec, x0, cfg, prior, false);
}

std::pair<RasterImage, SolverReport> admm_solve(const ProblemSpec& spec, const RasterImage& x0,
                                                const SolverConfig& cfg, const PriorHandle& prior) {
  return split_solve(spec, x0, cfg, prior, true);
}

double splitting_energy(const ProblemSpec& spec, const RasterImage& x, const PriorHandle& prior) {
  if (!prior.is_explicit()) throw ConfigError("energy needs an explicit prior");
  return smooth_energy(spec, x) + spec.split_weight.value_or(0.0) * prior_value(prior, x);
}

}  // namespace vcr
