#include <benchmark/benchmark.h>

#include "vcr/metrics.hpp"
#include "vcr/operators.hpp"
#include "vcr/priors.hpp"
#include "vcr/rng.hpp"
#include "vcr/solvers.hpp"
#include "vcr/tasks.hpp"

using namespace vcr;

namespace {

RasterImage noise_raster(std::size_t n, std::size_t bands, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<double> s(n * n * bands);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = rng.uniform(i);
  return RasterImage(Geometry{n, n, bands}, std::move(s));
}

void BM_Blur(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise_raster(n, 8, 1);
  const auto op = LinearOperator::blur(x.geometry(), 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(apply(op, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.sample_count()));
}
BENCHMARK(BM_Blur)->Arg(64)->Arg(256);

void BM_BlurDownAdjoint(benchmark::State& state) {
  const auto x = noise_raster(256, 8, 2);
  const Geometry g = x.geometry();
  const auto op = LinearOperator::composite({LinearOperator::blur(g, 1.5), LinearOperator::downsample(g, 4)});
  const auto y = apply(op, x);
  for (auto _ : state) benchmark::DoNotOptimize(apply_adjoint(op, y));
}
BENCHMARK(BM_BlurDownAdjoint);

void BM_TvProx(benchmark::State& state) {
  const auto x = noise_raster(static_cast<std::size_t>(state.range(0)), 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tv_prox(x, 0.1, 50));
}
BENCHMARK(BM_TvProx)->Arg(64)->Arg(128);

void BM_SpeckleNoise(benchmark::State& state) {
  const auto x = create_raster(512, 512, 1, 1.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(add_noise(x, NoiseSpec{SpeckleNoise{4}, ++seed}));
  state.SetItemsProcessed(state.iterations() * 512 * 512);
}
BENCHMARK(BM_SpeckleNoise);

void BM_GammaProx(benchmark::State& state) {
  double v = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gamma_prox(0.8, v, 1.0, 4.0, 1e-6));
    v += 1e-9;
  }
}
BENCHMARK(BM_GammaProx);

void BM_DespecklePnp(benchmark::State& state) {
  const auto y = add_noise(create_raster(128, 128, 1, 0.5), NoiseSpec{SpeckleNoise{1}, 9});
  DespeckleConfig cfg;
  cfg.lambda = 0.1;
  cfg.solver.max_iterations = 10;
  cfg.solver.tolerance = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(despeckle_pnp(y, cfg));
}
BENCHMARK(BM_DespecklePnp)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto a = noise_raster(256, 4, 4), b = noise_raster(256, 4, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b, 1.0));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

void BM_EstimateSubspace(benchmark::State& state) {
  const auto x = noise_raster(128, 32, 6);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_subspace(x, 8));
}
BENCHMARK(BM_EstimateSubspace)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
