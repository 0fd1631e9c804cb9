// Acceptance suite: one PASS/FAIL line per check, exit status = number of failures.
//
// Every threshold check compares against a value computed here (closed forms,
// long reference runs, baselines), never against a library self-report alone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "vcr/metrics.hpp"
#include "vcr/operators.hpp"
#include "vcr/priors.hpp"
#include "vcr/solvers.hpp"
#include "vcr/tasks.hpp"

#ifdef VCR_HAVE_CLI
#include "cli/cli.hpp"
#endif

using namespace vcr;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ProblemSpec denoising(const RasterImage& y) {
  ProblemSpec s;
  s.fidelities.push_back(QuadraticFidelity{LinearOperator::identity(y.geometry()), y, 1.0});
  return s;
}

BandMatrix averaging_srf(std::size_t s, std::size_t bands) {
  std::vector<double> e(s * bands, 0.0);
  const std::size_t per = bands / s;
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t c = r * per; c < (r + 1) * per; ++c) e[r * bands + c] = 1.0 / static_cast<double>(per);
  return BandMatrix(s, bands, std::move(e));
}

// ---- 1 -------------------------------------------------------------------------------------------

Outcome adjoint_suite() {
  Outcome o;
  const Geometry g{16, 16, 3};
  double worst = 0.0;
  std::size_t checks = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t k = 0; k < 100; ++k) {
    const CounterRng rng(1000 + k);
    std::vector<std::uint8_t> valid(g.pixel_count());
    for (std::size_t p = 0; p < valid.size(); ++p) valid[p] = rng.uniform(p) < 0.7;
    std::vector<double> pe(2 * 3);
    for (std::size_t i = 0; i < pe.size(); ++i) pe[i] = rng.uniform(500 + i);
    const double sigma = 0.5 + 1.5 * rng.uniform(600);
    const std::size_t factor = rng.uniform(601) < 0.5 ? 2 : 4;

    const auto blur = LinearOperator::blur(g, sigma);
    const auto down = LinearOperator::downsample(g, factor);
    const auto mask = LinearOperator::mask(g, valid);
    const auto gain = LinearOperator::gain(test::random_raster(g, 2000 + k, 0.2, 2.0));
    const auto srf = LinearOperator::spectral_response(g, BandMatrix(2, 3, pe));
    const Geometry coarse = down.output_geometry();
    std::vector<LinearOperator> ops{LinearOperator::identity(g), blur, down, mask, gain, srf,
                                    LinearOperator::composite({gain, blur, down}),
                                    LinearOperator::composite({blur, mask, srf}),
                                    LinearOperator::composite({mask, down, LinearOperator::blur(coarse, 1.0)}),
                                    LinearOperator::composite({srf, LinearOperator::blur(srf.output_geometry(), sigma),
                                                               LinearOperator::downsample(srf.output_geometry(), 2)})};
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const auto x = test::random_raster(ops[i].input_geometry(), 3000 + 16 * k + i);
      const auto y = test::random_raster(ops[i].output_geometry(), 5000 + 16 * k + i);
      const RasterImage ax = apply(ops[i], x);
      const double lhs = dot(ax, y);
      const double rhs = dot(x, apply_adjoint(ops[i], y));
      worst = std::max(worst, std::abs(lhs - rhs) / (norm(ax) * norm(y)));
      ++checks;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(worst <= 1e-10, std::to_string(checks) + " checks, worst " + fmt("%.1e", worst));
  o.require(secs < 2.0, fmt("%.2fs", secs));
  return o;
}

// ---- 2 -------------------------------------------------------------------------------------------

// Relative l2 error between an analytic gradient and central differences.
double fd_error(const std::function<double(const RasterImage&)>& f, const RasterImage& x, const RasterImage& grad,
                double h) {
  std::vector<double> fd(x.samples().size());
  for (std::size_t i = 0; i < fd.size(); ++i) {
    std::vector<double> p(x.samples().begin(), x.samples().end()), m = p;
    p[i] += h;
    m[i] -= h;
    fd[i] = (f(x.with_samples(std::move(p))) - f(x.with_samples(std::move(m)))) / (2.0 * h);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    num += (grad.samples()[i] - fd[i]) * (grad.samples()[i] - fd[i]);
    den += fd[i] * fd[i];
  }
  return std::sqrt(num / den);
}

Outcome gradient_suite() {
  Outcome o;
  double quad = 0.0, gam = 0.0, tv = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Geometry g{8, 8, 1};
    const auto x = test::random_raster(g, 100 + k, 0.5, 1.5);
    const auto y = test::random_raster(g, 200 + k, 0.2, 2.0);
    std::vector<std::uint8_t> valid(64, 1);
    valid[k] = 0;

    ProblemSpec q;
    q.fidelities.push_back(QuadraticFidelity{
        LinearOperator::composite({LinearOperator::blur(g, 1.0), LinearOperator::mask(g, valid)}), y, 0.7});
    quad = std::max(quad, fd_error([&](const RasterImage& v) { return smooth_energy(q, v); }, x,
                                   smooth_energy_gradient(q, x), 1e-5));

    ProblemSpec f;
    f.fidelities.push_back(GammaFidelity{y, 1.3});
    gam = std::max(gam, fd_error([&](const RasterImage& v) { return smooth_energy(f, v); }, x,
                                 smooth_energy_gradient(f, x), 1e-5));

    tv = std::max(tv, fd_error([](const RasterImage& v) { return smooth_tv_value(v, 1e-2); }, x,
                               smooth_tv_gradient(x, 1e-2), 1e-5));
  }
  o.require(quad <= 1e-5, "quadratic " + fmt("%.1e", quad));
  o.require(gam <= 1e-5, "gamma " + fmt("%.1e", gam));
  o.require(tv <= 1e-5, "smoothed tv " + fmt("%.1e", tv));
  return o;
}

// ---- 3 -------------------------------------------------------------------------------------------

Outcome solver_oracles() {
  Outcome o;
  {
    const RasterImage y(Geometry{8, 1, 1}, {1.5, -0.2, 0.05, -2.0, 0.3, 0.0, -0.31, 0.9});
    const double lambda = 0.3;
    ProblemSpec spec = denoising(y);
    spec.split_weight = lambda;
    SolverConfig cfg;
    cfg.algorithm = Algorithm::admm;
    cfg.max_iterations = 500;
    cfg.tolerance = 1e-10;
    cfg.rho_growth = 1.0;
    L1SynthesisPrior l1;
    l1.dictionary = BandMatrix::identity(1);
    l1.iterations = 1;
    auto [x, r] = admm_solve(spec, create_raster(8, 1, 1, 0.0), cfg, l1);
    double err = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double v = y.samples()[i];
      const double closed = v > lambda ? v - lambda : (v < -lambda ? v + lambda : 0.0);
      err = std::max(err, std::abs(x.samples()[i] - closed));
    }
    o.require(err <= 1e-6, "admm l1 vs soft threshold " + fmt("%.1e", err));
  }
  {
    const auto y = test::random_raster({8, 8, 1}, 31, 0.0, 1.0);
    const double lambda = 0.15, eps = 1e-3;
    ProblemSpec smooth = denoising(y);
    smooth.regularizers.push_back({SmoothTvTerm{eps}, lambda});
    SolverConfig gd;
    gd.step = 1.0 / (1.0 + 8.0 * lambda / eps);
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
    const double e = 0.5 * dot(x - y, x - y) + lambda * tv_value(x);
    o.require(e <= 1.0001 * oracle, "hqs tv energy " + fmt("%.6f", e) + " vs gd " + fmt("%.6f", oracle));
  }
  return o;
}

// ---- 4 -------------------------------------------------------------------------------------------

Outcome speckle_statistics() {
  Outcome o;
  for (unsigned looks : {1u, 4u, 16u}) {
    const auto s = add_noise(create_raster(1000, 1000, 1, 1.0), NoiseSpec{SpeckleNoise{looks}, 40 + looks});
    double mean = 0.0;
    for (double v : s.samples()) mean += v;
    mean /= 1e6;
    double var = 0.0;
    for (double v : s.samples()) var += (v - mean) * (v - mean);
    var /= 1e6;
    const double dm = std::abs(mean - 1.0), dv = std::abs(var - 1.0 / looks);
    o.require(dm < 0.005 && dv < 0.01,
              "L=" + std::to_string(looks) + " mean " + fmt("%.4f", mean) + " var " + fmt("%.4f", var));
  }
  return o;
}

// ---- 5 -------------------------------------------------------------------------------------------

Outcome sar_pnp() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto clean = test::cartoon(128);
  const auto y = add_noise(clean, NoiseSpec{SpeckleNoise{1}, 2024});
  const Region flat{8, 88, 32, 32};

  DespeckleConfig cfg;
  cfg.lambda = 0.08;
  cfg.prior = TvPrior{50, 0.125, 1.0};
  cfg.solver.rho0 = 10.0;
  cfg.solver.rho_growth = 1.05;
  cfg.solver.max_iterations = 60;
  cfg.solver.tolerance = 1e-6;
  auto [x, r] = despeckle_pnp(y, cfg);

  // Baseline at its best setting from a small (lambda, epsilon) sweep, run to convergence.
  SolverConfig aa;
  aa.step = 0.05;
  aa.max_iterations = 20000;
  aa.tolerance = 1e-14;
  auto [xa, ra] = despeckle_aa_tv(y, 0.1, aa, 0.05);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  double cubic = 0.0;
  for (double c : r.traces.at("cubic_residual")) cubic = std::max(cubic, c);
  bool positive = true;
  for (double v : x.samples()) positive = positive && v >= cfg.floor;

  const double p_noisy = psnr(clean, y, 1.0), p = psnr(clean, x, 1.0), p_aa = psnr(clean, xa, 1.0);
  const double e = enl(x, flat);
  o.require(cubic <= 1e-8 && positive, "cubic residual " + fmt("%.1e", cubic));
  o.require(e >= 10.0, "ENL " + fmt("%.1f", e) + " (noisy " + fmt("%.2f", enl(y, flat)) + ")");
  o.require(p - p_noisy >= 4.0, "PSNR " + fmt("%.2f", p_noisy) + " -> " + fmt("%.2f", p));
  o.require(p >= p_aa - 0.2, "aa-tv " + fmt("%.2f", p_aa));
  o.require(secs < 30.0, fmt("%.1fs", secs));
  return o;
}

// ---- 6 -------------------------------------------------------------------------------------------

Outcome hsi_denoising() {
  Outcome o;
  const auto clean = test::low_rank_cube(64, 64, 16, 3, 11);
  {
    const auto noisy = add_noise(clean, NoiseSpec{GaussianNoise{25.0 / 255.0}, 13});
    HsiDenoiseConfig cfg;
    cfg.tau = 0.1;
    cfg.prior = TvPrior{};
    cfg.solver.max_iterations = 10;
    auto [d, r] = hsi_denoise_pnp(noisy, cfg);
    const double p0 = psnr(clean, noisy, 1.0), p1 = psnr(clean, d.x, 1.0);
    const double m0 = msa(clean, noisy).degrees, m1 = msa(clean, d.x).degrees;
    o.require(p1 - p0 >= 5.0, "gaussian PSNR " + fmt("%.2f", p0) + " -> " + fmt("%.2f", p1));
    o.require(m1 < m0, "MSA " + fmt("%.2f", m0) + " -> " + fmt("%.2f", m1) + " deg");
  }
  {
    const auto y = add_noise(clean, NoiseSpec{ImpulseNoise{0.05, -10.0, 10.0}, 12});
    // Spectral subspace from pixels that a 3x3 median flags as impulse-free; the
    // l1-synthesis prior over that basis acts as a projection onto it.
    const auto med = median_filter(y, 1);
    const std::size_t n = y.pixel_count(), bands = y.bands();
    std::vector<std::size_t> keep;
    for (std::size_t p = 0; p < n; ++p) {
      bool ok = true;
      for (std::size_t b = 0; b < bands; ++b) ok = ok && std::abs(y.samples()[b * n + p] - med.samples()[b * n + p]) <= 1.0;
      if (ok) keep.push_back(p);
    }
    std::vector<double> spectra(keep.size() * bands);
    for (std::size_t b = 0; b < bands; ++b)
      for (std::size_t k = 0; k < keep.size(); ++k) spectra[b * keep.size() + k] = y.samples()[b * n + keep[k]];
    L1SynthesisPrior sub;
    sub.dictionary = estimate_subspace(RasterImage(Geometry{keep.size(), 1, bands}, std::move(spectra)), std::nullopt)
                         .transpose();
    sub.iterations = 1;

    HsiDenoiseConfig cfg;
    cfg.tau = 1e-6;
    cfg.lambda_s = 1e-4;
    cfg.prior = sub;
    cfg.solver.rho0 = 1e-5;
    cfg.solver.rho_growth = 1.01;
    cfg.solver.max_iterations = 500;
    cfg.solver.tolerance = 1e-12;
    auto [d, r] = hsi_denoise_pnp(y, cfg);
    const double err = test::max_abs_diff(d.x, clean);
    o.require(err <= 1e-3, "impulses: max |X - truth| " + fmt("%.1e", err) + " (basis rank " +
                               std::to_string(sub.dictionary.cols()) + ")");
  }
  return o;
}

// ---- 7 -------------------------------------------------------------------------------------------

Outcome cnn_fus() {
  Outcome o;
  double ortho = 0.0;
  {
    const auto truth = test::low_rank_cube(12, 12, 8, 3, 5);
    const BandMatrix srf = averaging_srf(2, 8);
    FusionInputs in{truth, apply(LinearOperator::spectral_response(truth.geometry(), srf), truth),
                    LinearOperator::identity(truth.geometry()), srf, 1.0, 0.0, 3};
    SolverConfig cfg;
    cfg.cg_tolerance = 1e-14;
    auto [x, r] = fuse_cnnfus(in, TvPrior{}, cfg);
    const double err = test::max_abs_diff(x, truth);
    o.require(err <= 1e-8, "identity fit " + fmt("%.1e", err));
    ortho = std::max(ortho, orthonormality_error(estimate_subspace(truth, 3)));
    for (double v : r.traces.at("orthonormality")) ortho = std::max(ortho, v);
  }
  {
    const auto truth = test::low_rank_cube(48, 48, 8, 3, 21);
    const Geometry g = truth.geometry();
    const auto h = LinearOperator::composite({LinearOperator::blur(g, 1.0), LinearOperator::downsample(g, 3)});
    const BandMatrix srf = averaging_srf(2, 8);
    FusionInputs in{add_noise(apply(h, truth), NoiseSpec{GaussianNoise{0.01}, 31}),
                    add_noise(apply(LinearOperator::spectral_response(g, srf), truth), NoiseSpec{GaussianNoise{0.01}, 32}),
                    h, srf, 1.0, 0.01, 4};
    SolverConfig cfg;
    cfg.rho0 = 0.1;
    cfg.max_iterations = 30;
    auto [x, r] = fuse_cnnfus(in, TvPrior{}, cfg);
    for (double v : r.traces.at("orthonormality")) ortho = std::max(ortho, v);
    const double p = psnr(truth, x, 1.0), base = psnr(truth, replicate_upsample(in.y, 3), 1.0);
    o.require(p >= base + 2.0, "wald x3 " + fmt("%.2f", p) + " vs replication " + fmt("%.2f", base));
  }
  o.require(ortho <= 1e-8, "orthonormality " + fmt("%.1e", ortho));
  return o;
}

// ---- 8 -------------------------------------------------------------------------------------------

Outcome dl_vm() {
  Outcome o;
  const auto truth = test::low_rank_cube(64, 64, 8, 3, 22);
  const Geometry g = truth.geometry();
  const auto h = LinearOperator::composite({LinearOperator::blur(g, 1.5), LinearOperator::downsample(g, 4)});
  const BandMatrix srf = averaging_srf(1, 8);
  FusionInputs in{apply(h, truth), apply(LinearOperator::spectral_response(g, srf), truth), h, srf, 0.5, 1e-4,
                  std::nullopt};
  const GradientField gr = forward_gradient(truth);
  SolverConfig cfg;
  cfg.cg_tolerance = 1e-12;
  cfg.cg_max_iterations = 3000;
  auto [x, r] = fuse_dlvm(in, gr.dx, gr.dy, cfg);

  // Normal-equation residual assembled here from the operators.
  auto normal = [&](const RasterImage& v) {
    const GradientField d = forward_gradient(v);
    return apply_adjoint(h, apply(h, v)) + in.gamma * forward_gradient_adjoint(d) +
           in.lambda * laplacian_apply(laplacian_apply(v));
  };
  const RasterImage b = apply_adjoint(h, in.y) + in.gamma * forward_gradient_adjoint(gr);
  const double rel = norm(normal(x) - b) / norm(b);
  o.require(rel <= 1e-6, "gradient norm / |b| " + fmt("%.1e", rel));
  const double p = psnr(truth, x, 1.0), base = psnr(truth, replicate_upsample(in.y, 4), 1.0);
  o.require(p >= base + 2.0, "ratio 4 " + fmt("%.2f", p) + " vs replication " + fmt("%.2f", base));
  return o;
}

// ---- 9 -------------------------------------------------------------------------------------------

Outcome metric_cases() {
  Outcome o;
  const auto x = test::random_raster({32, 32, 3}, 77, 0.0, 1.0);
  o.require(std::abs(ssim(x, x, 1.0) - 1.0) <= 1e-12, "ssim(X,X) " + fmt("%.15f", ssim(x, x, 1.0)));

  const RasterImage a(Geometry{1, 1, 2}, {1.0, 0.0}), b(Geometry{1, 1, 2}, {0.0, 3.0});
  o.require(std::abs(msa(a, b).degrees - 90.0) <= 1e-9, "msa orthogonal " + fmt("%.12f", msa(a, b).degrees));

  // mse 1/4 at peak 1, and mse 1 at peak 2: both 10 log10(4)
  const double want = 10.0 * std::log10(4.0);
  const double p1 = psnr(create_raster(8, 8, 1, 0.0), create_raster(8, 8, 1, 0.5), 1.0);
  const double p2 = psnr(create_raster(8, 8, 2, 1.0), create_raster(8, 8, 2, 2.0), 2.0);
  o.require(std::abs(p1 - want) <= 1e-6 && std::abs(p2 - want) <= 1e-6 && std::abs(want - 6.0206) < 1e-4,
            "psnr " + fmt("%.6f", p1) + ", " + fmt("%.6f", p2));

  const double e = enl(RasterImage(Geometry{2, 2, 1}, {1.0, 3.0, 3.0, 1.0}), Region{0, 0, 2, 2});
  o.require(e == 4.0, "enl {1,3} " + fmt("%.17g", e));
  return o;
}

// ---- 10 ------------------------------------------------------------------------------------------

#ifdef VCR_HAVE_CLI
std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::string strip_wall_time(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("\"wall_time\"") == std::string::npos) out += line + '\n';
  return out;
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) std::fprintf(stderr, "vcr %s: %s", args.front().c_str(), err.str().c_str());
  return code;
}
#endif

Outcome replay() {
  Outcome o;
#ifndef VCR_HAVE_CLI
  o.require(false, "command-line tool not built");
#else
  test::TempDir dir;
  auto p = [&](const char* name) { return (dir / name).string(); };
  const auto truth = test::low_rank_cube(48, 48, 8, 3, 9);
  write_raster(test::cartoon(64), dir / "clean.vcr");
  write_raster(truth, dir / "truth.vcr");
  std::ofstream(dir / "srf.json") << band_matrix_to_json(averaging_srf(2, 8));

  const std::vector<std::vector<std::string>> setup{
      {"degrade", "--in", p("clean.vcr"), "--out", p("speckled.vcr"), "--speckle-looks", "1", "--seed", "7"},
      {"degrade", "--in", p("truth.vcr"), "--out", p("hsi.vcr"), "--blur-sigma", "1", "--down", "3", "--noise-sigma",
       "0.01", "--seed", "8"},
      {"degrade", "--in", p("truth.vcr"), "--out", p("msi.vcr"), "--srf", p("srf.json"), "--noise-sigma", "0.01",
       "--seed", "9"}};
  for (const auto& a : setup)
    if (cli(a) != 0) {
      o.require(false, "degrade failed");
      return o;
    }

  struct Case {
    std::string label;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"despeckle",
       {"despeckle", "--in", p("speckled.vcr"), "--out", p("d.vcr"), "--method", "pnp", "--prior", "tv", "--looks",
        "1", "--lambda", "0.3", "--iterations", "20", "--report", p("d.csv")},
       {p("d.vcr"), p("d.csv")}},
      {"fuse cnnfus",
       {"fuse", "--method", "cnnfus", "--hsi", p("hsi.vcr"), "--msi", p("msi.vcr"), "--srf", p("srf.json"),
        "--blur-sigma", "1", "--subspace", "4", "--lambda", "0.01", "--rho0", "0.1", "--iterations", "10", "--out",
        p("c.vcr"), "--report", p("c.csv")},
       {p("c.vcr"), p("c.csv")}},
      {"fuse dlvm",
       {"fuse", "--method", "dlvm", "--hsi", p("hsi.vcr"), "--msi", p("msi.vcr"), "--srf", p("srf.json"),
        "--blur-sigma", "1", "--out", p("v.vcr")},
       {p("v.vcr")}}};

  for (const auto& c : cases) {
    std::vector<std::string> first;
    bool ran = cli(c.args) == 0;
    for (const auto& f : c.files) first.push_back(slurp(f));
    const std::string m1 = strip_wall_time(slurp(c.files.front() + ".manifest.json"));
    ran = ran && cli(c.args) == 0;
    bool same = ran && strip_wall_time(slurp(c.files.front() + ".manifest.json")) == m1;
    for (std::size_t i = 0; i < c.files.size(); ++i) same = same && slurp(c.files[i]) == first[i] && !first[i].empty();
    o.require(same, c.label + (same ? " identical" : " differs"));
  }
#endif
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"adjoint suite", adjoint_suite},
      {"gradient suite", gradient_suite},
      {"solver oracle equivalence", solver_oracles},
      {"speckle statistics", speckle_statistics},
      {"sar-pnp despeckling", sar_pnp},
      {"hsi pnp denoising", hsi_denoising},
      {"cnn-fus fusion", cnn_fus},
      {"dl-vm fusion", dl_vm},
      {"metrics", metric_cases},
      {"determinism replay", replay},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %-26s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
