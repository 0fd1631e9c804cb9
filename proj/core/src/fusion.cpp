#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "vcr/error.hpp"
#include "vcr/tasks.hpp"

namespace vcr {

namespace {

RasterImage zeros_like(const Geometry& g) { return RasterImage(g, std::vector<double>(g.sample_count(), 0.0)); }

void accumulate(std::vector<double>& acc, double w, const RasterImage& t) {
  auto s = t.samples();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * s[i];
}

std::optional<std::size_t> integer_ratio(const Geometry& hi, const Geometry& lo) {
  if (lo.width == 0 || hi.width % lo.width != 0 || hi.height % lo.height != 0) return std::nullopt;
  const std::size_t r = hi.width / lo.width;
  if (hi.height / lo.height != r) return std::nullopt;
  return r;
}

}  // namespace

void validate(const FusionInputs& in) {
  const Geometry& target = in.h_op.input_geometry();
  require_same_geometry(in.h_op.output_geometry(), in.y.geometry(), "fusion H output vs HSI");
  if (target.bands != in.y.bands()) {
    throw GeometryError(detail::concat("fusion H must keep the band count, got ", target.bands, " vs ", in.y.bands()));
  }
  if (in.z.width() != target.width || in.z.height() != target.height) {
    throw GeometryError(detail::concat("MSI is ", in.z.geometry(), " but the fusion target is ", target));
  }
  if (in.srf.rows() != in.z.bands() || in.srf.cols() != in.y.bands()) {
    throw GeometryError(detail::concat("spectral response is ", in.srf.rows(), "x", in.srf.cols(), ", expected ",
                                       in.z.bands(), "x", in.y.bands()));
  }
  if (in.z.bands() > in.y.bands()) throw GeometryError("MSI must not have more bands than the HSI");
  if (!(in.gamma >= 0.0) || !(in.lambda >= 0.0)) throw ConfigError("fusion weights must be >= 0");
  if (in.subspace && (*in.subspace < 1 || *in.subspace > in.y.bands())) {
    throw ConfigError(detail::concat("subspace dimension must lie in [1, ", in.y.bands(), "]"));
  }
}

RasterImage replicate_upsample(const RasterImage& img, std::size_t factor) {
  if (factor < 1) throw ConfigError("upsampling factor must be >= 1");
  const Geometry& g = img.geometry();
  const Geometry out{g.width * factor, g.height * factor, g.bands};
  std::vector<double> s(out.sample_count());
  auto src = img.samples();
  for (std::size_t b = 0; b < g.bands; ++b)
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x)
        s[b * out.pixel_count() + y * out.width + x] = src[b * g.pixel_count() + (y / factor) * g.width + x / factor];
  return RasterImage(out, std::move(s), std::nullopt, img.wavelengths());
}

BandMatrix estimate_subspace(const RasterImage& img, std::optional<std::size_t> rank) {
  const std::size_t bands = img.bands(), n = img.pixel_count();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>> y(img.samples().data(),
                                                                                             static_cast<Eigen::Index>(n),
                                                                                             static_cast<Eigen::Index>(bands));
  const Eigen::MatrixXd gram = y.transpose() * y;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw SubspaceError("eigendecomposition of the band Gram matrix failed", 0);
  // Eigen sorts ascending; walk from the top.
  const Eigen::VectorXd vals = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();
  const double top = std::max(vals(0), 0.0);
  std::size_t achievable = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals(i) > 1e-12 * top && top > 0.0) ++achievable;

  std::size_t l;
  if (rank) {
    l = *rank;
    if (l < 1 || l > bands) throw ConfigError(detail::concat("subspace dimension must lie in [1, ", bands, "]"));
    if (l > achievable) {
      throw SubspaceError(detail::concat("HSI band matrix has rank ", achievable, ", cannot span a ", l,
                                         "-dimensional subspace"),
                          achievable);
    }
  } else {
    if (achievable == 0) throw SubspaceError("HSI band matrix is zero", 0);
    const double total = vals.head(static_cast<Eigen::Index>(achievable)).sum();
    double acc = 0.0;
    l = 0;
    while (l < achievable && acc < 0.999 * total) acc += vals(static_cast<Eigen::Index>(l++));
    l = std::min<std::size_t>(l, 12);
  }

  std::vector<double> rows(l * bands);
  for (std::size_t r = 0; r < l; ++r) {
    Eigen::VectorXd v = vecs.col(static_cast<Eigen::Index>(r));
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    for (std::size_t b = 0; b < bands; ++b) rows[r * bands + b] = v(static_cast<Eigen::Index>(b));
  }
  return BandMatrix(l, bands, std::move(rows));
}

double orthonormality_error(const BandMatrix& psi) {
  const BandMatrix g = psi * psi.transpose();
  double worst = 0.0;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) worst = std::max(worst, std::abs(g(r, c) - (r == c ? 1.0 : 0.0)));
  return worst;
}

// ---- DL-VM ---------------------------------------------------------------------------------------------

std::pair<RasterImage, SolverReport> fuse_dlvm(const FusionInputs& in, const RasterImage& g1, const RasterImage& g2,
                                               const SolverConfig& cfg) {
  validate(in);
  validate(cfg);
  const Geometry& target = in.h_op.input_geometry();
  require_same_geometry(g1.geometry(), target, "horizontal gradient prior");
  require_same_geometry(g2.geometry(), target, "vertical gradient prior");

  auto normal = [&](const RasterImage& u) {
    std::vector<double> acc(u.sample_count(), 0.0);
    accumulate(acc, 1.0, apply_adjoint(in.h_op, apply(in.h_op, u)));
    if (in.gamma > 0.0) accumulate(acc, in.gamma, forward_gradient_adjoint(forward_gradient(u)));
    if (in.lambda > 0.0) accumulate(acc, in.lambda, laplacian_apply(laplacian_apply(u)));
    return RasterImage(u.geometry(), std::move(acc));
  };

  std::vector<double> rhs(target.sample_count(), 0.0);
  accumulate(rhs, 1.0, apply_adjoint(in.h_op, RasterImage(in.y.geometry(), std::vector<double>(
                                                                                 in.y.samples().begin(),
                                                                                 in.y.samples().end()))));
  if (in.gamma > 0.0) {
    accumulate(rhs, in.gamma,
               forward_gradient_adjoint({RasterImage(target, std::vector<double>(g1.samples().begin(), g1.samples().end())),
                                         RasterImage(target, std::vector<double>(g2.samples().begin(), g2.samples().end()))}));
  }
  const RasterImage b(target, std::move(rhs));

  RasterImage x0 = zeros_like(target);
  if (const auto r = integer_ratio(target, in.y.geometry())) {
    const RasterImage up = replicate_upsample(in.y, *r);
    x0 = RasterImage(target, std::vector<double>(up.samples().begin(), up.samples().end()));
  }
  auto [x, report] = conjugate_gradient(normal, b, x0, cfg);

  const RasterImage ax = normal(x);
  const double bn = norm(b);
  report.traces["normal_residual"].push_back(bn > 0.0 ? norm(ax - b) / bn : norm(ax));
  return {RasterImage(target, std::vector<double>(x.samples().begin(), x.samples().end()), std::nullopt,
                      in.y.wavelengths()),
          report};
}

GradientField transplant_gradients(const FusionInputs& in) {
  validate(in);
  const Geometry& target = in.h_op.input_geometry();
  const std::size_t n = target.pixel_count();
  auto zs = in.z.samples();
  std::vector<double> guide(n, 0.0);
  for (std::size_t b = 0; b < in.z.bands(); ++b)
    for (std::size_t i = 0; i < n; ++i) guide[i] += zs[b * n + i] / static_cast<double>(in.z.bands());
  double guide_mean = 0.0;
  for (double v : guide) guide_mean += v;
  guide_mean /= static_cast<double>(n);

  const GradientField gg = forward_gradient(RasterImage(Geometry{target.width, target.height, 1}, guide));
  const std::size_t ny = in.y.pixel_count();
  auto ys = in.y.samples();
  std::vector<double> dx(target.sample_count()), dy(target.sample_count());
  for (std::size_t b = 0; b < target.bands; ++b) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ny; ++i) mean += ys[b * ny + i];
    mean /= static_cast<double>(ny);
    const double scale = guide_mean != 0.0 ? mean / guide_mean : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dx[b * n + i] = scale * gg.dx.samples()[i];
      dy[b * n + i] = scale * gg.dy.samples()[i];
    }
  }
  return {RasterImage(target, std::move(dx)), RasterImage(target, std::move(dy))};
}

// ---- CNN-Fus ---------------------------------------------------------------------------------------------

std::pair<RasterImage, SolverReport> fuse_cnnfus(const FusionInputs& in, const PriorHandle& prior,
                                                 const SolverConfig& cfg) {
  validate(in);
  validate(cfg);
  const Geometry& target = in.h_op.input_geometry();
  const BandMatrix psi = estimate_subspace(in.y, in.subspace);
  const std::size_t l = psi.rows();
  const Geometry coeff{target.width, target.height, l};
  const LinearOperator synth = LinearOperator::spectral_response(coeff, psi.transpose());
  const LinearOperator srf = LinearOperator::spectral_response(target, in.srf);
  const double ortho = orthonormality_error(psi);

  const RasterImage y_plain(in.y.geometry(), std::vector<double>(in.y.samples().begin(), in.y.samples().end()));
  const RasterImage z_plain(in.z.geometry(), std::vector<double>(in.z.samples().begin(), in.z.samples().end()));

  std::vector<double> rhs_data(coeff.sample_count(), 0.0);
  accumulate(rhs_data, 1.0, apply_adjoint(synth, apply_adjoint(in.h_op, y_plain)));
  if (in.gamma > 0.0) accumulate(rhs_data, in.gamma, apply_adjoint(synth, apply_adjoint(srf, z_plain)));

  auto data_normal = [&](const RasterImage& a, double penalty) {
    const RasterImage x = apply(synth, a);
    std::vector<double> acc(a.sample_count(), 0.0);
    accumulate(acc, 1.0, apply_adjoint(synth, apply_adjoint(in.h_op, apply(in.h_op, x))));
    if (in.gamma > 0.0) accumulate(acc, in.gamma, apply_adjoint(synth, apply_adjoint(srf, apply(srf, x))));
    if (penalty > 0.0) accumulate(acc, penalty, a);
    return RasterImage(a.geometry(), std::move(acc));
  };

  RasterImage alpha = zeros_like(coeff);
  if (const auto r = integer_ratio(target, in.y.geometry())) {
    const RasterImage up = replicate_upsample(y_plain, *r);
    alpha = apply_adjoint(synth, RasterImage(target, std::vector<double>(up.samples().begin(), up.samples().end())));
  }

  SolverReport report;
  report.stop_reason = StopReason::max_iterations;
  auto finish = [&](const RasterImage& a) {
    const RasterImage x = apply(synth, a);
    return std::pair{RasterImage(target, std::vector<double>(x.samples().begin(), x.samples().end()), std::nullopt,
                                 in.y.wavelengths()),
                     report};
  };

  if (in.lambda == 0.0) {
    auto [a, cg] = conjugate_gradient([&](const RasterImage& u) { return data_normal(u, 0.0); },
                                      RasterImage(coeff, rhs_data), alpha, cfg);
    report.iterations = 1;
    report.primal_residual.push_back(0.0);
    report.dual_residual.push_back(0.0);
    report.traces["cg_iterations"].push_back(static_cast<double>(cg.iterations));
    report.traces["orthonormality"].push_back(ortho);
    report.stop_reason = StopReason::tolerance;
    return finish(a);
  }

  const std::size_t m = coeff.sample_count();
  std::vector<double> v(alpha.samples().begin(), alpha.samples().end());
  std::vector<double> w(m, 0.0);
  const double rho_max = effective_rho_max(cfg);
  double rho = cfg.rho0;

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    std::vector<double> rhs = rhs_data;
    for (std::size_t i = 0; i < m; ++i) rhs[i] += 2.0 * rho * (v[i] - w[i]);
    auto [a_next, cg] = conjugate_gradient([&](const RasterImage& u) { return data_normal(u, 2.0 * rho); },
                                           RasterImage(coeff, std::move(rhs)), alpha, cfg);
    auto as = a_next.samples();

    std::vector<double> shifted(m);
    for (std::size_t i = 0; i < m; ++i) shifted[i] = as[i] + w[i];
    const double sigma2 = in.lambda / (2.0 * rho);
    const RasterImage shifted_img(coeff, std::move(shifted));
    const RasterImage v_img =
        prior.is_explicit()
            ? prox(prior, shifted_img, sigma2)
            : denoise(prior, shifted_img, cfg.noise_arg == NoiseArg::std_dev ? std::sqrt(sigma2) : sigma2);
    auto vs = v_img.samples();

    double primal = 0.0, dual = 0.0, diff = 0.0, prev = 0.0, an = 0.0;
    auto aprev = alpha.samples();
    for (std::size_t i = 0; i < m; ++i) {
      const double gap = as[i] - vs[i];
      primal += gap * gap;
      dual += (vs[i] - v[i]) * (vs[i] - v[i]);
      diff += (as[i] - aprev[i]) * (as[i] - aprev[i]);
      prev += aprev[i] * aprev[i];
      an += as[i] * as[i];
      w[i] += gap;
      v[i] = vs[i];
    }
    alpha = a_next;
    ++report.iterations;
    report.primal_residual.push_back(std::sqrt(primal));
    report.dual_residual.push_back(2.0 * rho * std::sqrt(dual));
    report.traces["cg_iterations"].push_back(static_cast<double>(cg.iterations));
    report.traces["orthonormality"].push_back(ortho);
    report.traces["rho"].push_back(rho);

    const double change = std::sqrt(diff) / std::max(std::sqrt(prev), 1.0);
    if (change < cfg.tolerance && std::sqrt(primal) / std::max(std::sqrt(an), 1.0) < cfg.tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    const double rho_next = std::min(rho * cfg.rho_growth, rho_max);
    if (rho_next != rho) {
      for (double& wi : w) wi *= rho / rho_next;
      rho = rho_next;
    }
  }
  return finish(alpha);
}

}  // namespace vcr
