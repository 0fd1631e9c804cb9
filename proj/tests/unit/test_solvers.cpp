#include <cmath>
#include <limits>

#include "doctest.h"
#include "support.hpp"
#include "vcr/error.hpp"
#include "vcr/solvers.hpp"

using namespace vcr;

namespace {

ProblemSpec denoising(const RasterImage& y, double weight = 1.0) {
  ProblemSpec spec;
  spec.fidelities.push_back(QuadraticFidelity{LinearOperator::identity(y.geometry()), y, weight});
  return spec;
}

LinearMap matrix_map(std::vector<double> a, std::size_t n) {
  return [a = std::move(a), n](const RasterImage& x) {
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) out[r] += a[r * n + c] * x.samples()[c];
    return RasterImage(x.geometry(), std::move(out));
  };
}

double gamma_objective(double x, double y, double v, double lambda, double penalty) {
  return lambda * (std::log(x) + y / x) + 0.5 * penalty * (x - v) * (x - v);
}

// Dense log-spaced scan followed by golden-section refinement around the best sample.
double gamma_prox_oracle(double y, double v, double lambda, double penalty, double floor) {
  const double hi = 1e3;
  double best = floor, best_obj = gamma_objective(floor, y, v, lambda, penalty);
  const int n = 200000;
  for (int i = 0; i <= n; ++i) {
    const double x = floor * std::pow(hi / floor, static_cast<double>(i) / n);
    const double o = gamma_objective(x, y, v, lambda, penalty);
    if (o < best_obj) {
      best_obj = o;
      best = x;
    }
  }
  const double ratio = std::pow(hi / floor, 1.0 / n);
  double a = std::max(floor, best / ratio), b = best * ratio;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (gamma_objective(c, y, v, lambda, penalty) < gamma_objective(d, y, v, lambda, penalty))
      b = d;
    else
      a = c;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_SUITE("solvers") {
  TEST_CASE("configuration checks") {
    SolverConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = {};
    cfg.rho_growth = 0.5;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = {};
    CHECK(effective_rho_max(cfg) == 1e6);
    CHECK(std::string(to_string(StopReason::max_iterations)) == "max-iterations");

    const auto y = create_raster(4, 4, 1, 0.5);
    ProblemSpec spec = denoising(y);
    spec.regularizers.push_back({PriorTerm{TvPrior{}}, 1.0});
    CHECK_THROWS_AS(validate(spec, y.geometry(), false), ConfigError);
    CHECK_THROWS_AS(validate(denoising(y), y.geometry(), true), ConfigError);
    CHECK_THROWS_AS(validate(denoising(y), Geometry{3, 4, 1}, false), GeometryError);
  }

  TEST_CASE("gradient descent on a pure quadratic") {
    const auto y = test::random_raster({5, 4, 2}, 1);
    SolverConfig cfg;
    cfg.algorithm = Algorithm::gd;
    cfg.step = 1.0;
    auto [x1, r1] = gradient_descent(denoising(y), create_raster(5, 4, 2, 0.0), cfg);
    CHECK(test::max_abs_diff(x1, y) <= 1e-15);

    // x_k = (1 - (1/2)^k) y
    cfg.step = 0.5;
    cfg.max_iterations = 6;
    cfg.tolerance = 1e-300;
    auto [x6, r6] = gradient_descent(denoising(y), create_raster(5, 4, 2, 0.0), cfg);
    CHECK(r6.iterations == 6);
    CHECK(r6.stop_reason == StopReason::max_iterations);
    CHECK(test::max_abs_diff(x6, (1.0 - std::pow(0.5, 6)) * y) <= 1e-14);
    for (std::size_t i = 1; i < r6.energy.size(); ++i) CHECK(r6.energy[i] < r6.energy[i - 1]);
  }

  TEST_CASE("gradient descent divergence and monotone steps") {
    const auto y = test::random_raster({4, 4, 1}, 2);
    SolverConfig cfg;
    cfg.step = 3.0;
    cfg.max_iterations = 100;
    auto [xd, rd] = gradient_descent(denoising(y), create_raster(4, 4, 1, 0.0), cfg);
    CHECK(rd.stop_reason == StopReason::diverged);
    CHECK(rd.iterations == 5);

    cfg.monotone_step = true;
    auto [xm, rm] = gradient_descent(denoising(y), create_raster(4, 4, 1, 0.0), cfg);
    CHECK(rm.stop_reason == StopReason::tolerance);
    CHECK(test::max_abs_diff(xm, y) <= 1e-3);
    for (std::size_t i = 1; i < rm.energy.size(); ++i) CHECK(rm.energy[i] <= rm.energy[i - 1]);
  }

  TEST_CASE("gradient descent honours a projection") {
    const auto y = create_raster(3, 3, 1, -1.0);
    SolverConfig cfg;
    cfg.step = 0.5;
    auto [x, r] = gradient_descent(denoising(y), create_raster(3, 3, 1, 1.0), cfg, [](std::span<double> s) {
      for (double& v : s) v = std::max(v, 0.25);
    });
    for (double v : x.samples()) CHECK(v == 0.25);
  }

  TEST_CASE("conjugate gradient small systems") {
    SolverConfig cfg;
    const Geometry g2{2, 1, 1};
    auto [x, r] = conjugate_gradient(matrix_map({4, 1, 1, 3}, 2), RasterImage(g2, {1, 2}), create_raster(2, 1, 1, 0.0), cfg);
    CHECK(x.samples()[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-12));
    CHECK(x.samples()[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-12));
    CHECK(r.iterations <= 2);
    CHECK(r.stop_reason == StopReason::tolerance);

    const auto d = test::random_raster({6, 5, 1}, 3, 0.5, 4.0);
    const auto b = test::random_raster({6, 5, 1}, 4);
    auto diag = [&](const RasterImage& u) {
      std::vector<double> o(u.sample_count());
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = d.samples()[i] * u.samples()[i];
      return RasterImage(u.geometry(), std::move(o));
    };
    auto [xd, rd] = conjugate_gradient(diag, b, create_raster(6, 5, 1, 0.0), cfg);
    for (std::size_t i = 0; i < 30; ++i) CHECK(xd.samples()[i] == doctest::Approx(b.samples()[i] / d.samples()[i]));
    for (std::size_t i = 1; i < rd.energy.size(); ++i) CHECK(rd.energy[i] <= rd.energy[i - 1] + 1e-14);

    auto [x0, r0] = conjugate_gradient(diag, create_raster(6, 5, 1, 0.0), d, cfg);
    for (double v : x0.samples()) CHECK(v == 0.0);
    CHECK(r0.stop_reason == StopReason::tolerance);

    CHECK_THROWS_AS(conjugate_gradient(matrix_map({1, 2, 0, 1}, 2), RasterImage(g2, {1, 1}), create_raster(2, 1, 1, 0.0), cfg),
                    OperatorError);
    CHECK_THROWS_AS(conjugate_gradient(matrix_map({-1, 0, 0, -2}, 2), RasterImage(g2, {1, 1}), create_raster(2, 1, 1, 0.0), cfg),
                    OperatorError);
  }

  TEST_CASE("finite-difference agreement of every smooth term") {
    const Geometry g{8, 8, 2};
    const auto y = test::random_raster({4, 4, 2}, 7);
    ProblemSpec spec;
    spec.fidelities.push_back(QuadraticFidelity{
        LinearOperator::composite({LinearOperator::blur(g, 1.0), LinearOperator::downsample(g, 2)}), y, 0.7});
    spec.fidelities.push_back(GammaFidelity{test::random_raster(g, 8, 0.2, 2.0), 1.3});
    spec.regularizers.push_back({SmoothTvTerm{0.05}, 0.4});
    spec.regularizers.push_back({LaplacianTerm{}, 0.2});
    const auto x = test::random_raster(g, 9, 0.5, 1.5);
    CHECK(finite_difference_gradient_check(spec, x, 1e-6) <= 1e-5);

    auto negative = x.with_samples(std::vector<double>(x.sample_count(), -0.5));
    CHECK(smooth_energy(spec, negative) == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("masked observations drop out of the fidelity") {
    const Geometry g{3, 1, 1};
    std::vector<std::uint8_t> m{1, 0, 1};
    const RasterImage y(g, {1.0, 100.0, 3.0}, m);
    ProblemSpec spec = denoising(y);
    CHECK(smooth_energy(spec, RasterImage(g, {1.0, 0.0, 3.0})) == 0.0);
    CHECK(smooth_energy(spec, RasterImage(g, {2.0, 0.0, 3.0})) == 0.5);
  }

  TEST_CASE("gamma prox") {
    // x^3 - x^2 + x - 1 = (x - 1)(x^2 + 1)
    const auto p = gamma_prox(1.0, 1.0, 1.0, 1.0, 1e-6);
    CHECK(p.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(p.clamped);
    CHECK(p.cubic_residual <= 1e-14);
    CHECK(gamma_prox(0.7, 2.5, 0.0, 3.0, 1e-6).x == 2.5);
    CHECK(gamma_prox(0.7, 2.5, 1e-12, 3.0, 1e-6).x == doctest::Approx(2.5).epsilon(1e-10));
    // y = 0 makes the log term unbounded below: the floor wins.
    const auto f = gamma_prox(0.0, -1.0, 1.0, 1.0, 1e-3);
    CHECK(f.x == 1e-3);
    CHECK(f.clamped);
    CHECK_THROWS_AS(gamma_prox(-1.0, 1.0, 1.0, 1.0, 1e-6), DomainError);
    CHECK_THROWS_AS(gamma_prox(1.0, 1.0, 1.0, 1.0, 0.0), ConfigError);

    const CounterRng rng(77);
    for (std::uint64_t k = 0; k < 60; ++k) {
      const double y = 0.05 + 3.0 * rng.uniform(4 * k);
      const double v = -1.0 + 4.0 * rng.uniform(4 * k + 1);
      const double lambda = 0.05 + 2.0 * rng.uniform(4 * k + 2);
      const double penalty = 0.1 + 20.0 * rng.uniform(4 * k + 3);
      const auto got = gamma_prox(y, v, lambda, penalty, 1e-6);
      const double ref = gamma_prox_oracle(y, v, lambda, penalty, 1e-6);
      CHECK(gamma_objective(got.x, y, v, lambda, penalty) <= gamma_objective(ref, y, v, lambda, penalty) + 1e-10);
      if (!got.clamped) CHECK(got.cubic_residual <= 1e-8 * std::max({1.0, lambda * y, penalty}));
    }
  }

  TEST_CASE("admm with an l1 prior matches soft thresholding") {
    const RasterImage y(Geometry{8, 1, 1}, {1.5, -0.2, 0.05, -2.0, 0.3, 0.0, -0.31, 0.9});
    ProblemSpec spec = denoising(y);
    spec.split_weight = 0.3;
    SolverConfig cfg;
    cfg.algorithm = Algorithm::admm;
    cfg.max_iterations = 500;
    cfg.tolerance = 1e-10;
    cfg.rho_growth = 1.0;
    L1SynthesisPrior l1;
    l1.dictionary = BandMatrix::identity(1);
    l1.iterations = 1;
    auto [x, r] = admm_solve(spec, create_raster(8, 1, 1, 0.0), cfg, l1);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(x.samples()[i] - soft_threshold(y.samples()[i], 0.3)) <= 1e-6);
    CHECK(r.stop_reason == StopReason::tolerance);
    CHECK(r.energy.size() == r.iterations);
  }

  TEST_CASE("admm with a laplacian prior reaches the linear-system solution") {
    const auto y = test::random_raster({6, 6, 1}, 13);
    ProblemSpec spec = denoising(y);
    spec.split_weight = 0.5;
    SolverConfig cfg;
    cfg.max_iterations = 400;
    cfg.tolerance = 1e-12;
    cfg.rho_growth = 1.0;
    auto [x, r] = admm_solve(spec, y, cfg, LaplacianPrior{});
    // (I + lambda Q^2) x = y
    const auto back = lincomb(1.0, x, 0.5, laplacian_apply(laplacian_apply(x)));
    CHECK(test::max_abs_diff(back, y) <= 1e-6);
  }

  TEST_CASE("zero split weight solves the fidelity alone") {
    const Geometry g{8, 8, 1};
    const auto truth = test::random_raster(g, 17);
    const auto op = LinearOperator::blur(g, 1.0);
    ProblemSpec spec;
    spec.fidelities.push_back(QuadraticFidelity{op, apply(op, truth), 1.0});
    spec.regularizers.push_back({LaplacianTerm{}, 1e-3});
    spec.split_weight = 0.0;
    SolverConfig cfg;
    cfg.max_iterations = 1000;
    auto [x, r] = hqs_solve(spec, create_raster(8, 8, 1, 0.0), cfg, TvPrior{});
    CHECK(r.iterations == 1);
    CHECK(r.stop_reason == StopReason::tolerance);
    CHECK(norm(smooth_energy_gradient(spec, x)) <= 1e-8);
  }

  TEST_CASE("splitting rejects a smoothed TV regularizer") {
    const auto y = create_raster(4, 4, 1, 0.5);
    ProblemSpec spec = denoising(y);
    spec.regularizers.push_back({SmoothTvTerm{}, 1.0});
    spec.split_weight = 1.0;
    CHECK_THROWS_AS(hqs_solve(spec, y, SolverConfig{}, TvPrior{}), ConfigError);
  }

  TEST_CASE("hqs tv denoising against a long gradient-descent run") {
    const auto y = test::random_raster({8, 8, 1}, 31, 0.0, 1.0);
    const double lambda = 0.15;

    ProblemSpec smooth = denoising(y);
    smooth.regularizers.push_back({SmoothTvTerm{1e-3}, lambda});
    SolverConfig gd;
    gd.step = 1.0 / (1.0 + 8.0 * lambda / 1e-3);
    gd.max_iterations = 10000;
    gd.tolerance = 1e-300;
    gd.monotone_step = true;
    auto [xo, ro] = gradient_descent(smooth, y, gd);
    const double oracle = 0.5 * dot(xo - y, xo - y) + lambda * tv_value(xo);

    ProblemSpec split = denoising(y);
    split.split_weight = lambda;
    SolverConfig cfg;
    cfg.max_iterations = 600;
    cfg.tolerance = 1e-9;
    cfg.rho0 = 0.1;
    cfg.rho_growth = 1.02;
    auto [x, r] = hqs_solve(split, y, cfg, TvPrior{100, 0.125, 1.0});
    CHECK(splitting_energy(split, x, TvPrior{}) <= 1.0001 * oracle);
  }
}
