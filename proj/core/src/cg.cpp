#include <cmath>

#include "vcr/error.hpp"
#include "vcr/rng.hpp"
#include "vcr/solvers.hpp"

namespace vcr {

namespace {

RasterImage probe_vector(const RasterImage& like, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<double> v(like.sample_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal(i);
  return RasterImage(like.geometry(), std::move(v));
}

void check_symmetry(const LinearMap& apply_a, const RasterImage& b) {
  const RasterImage u = probe_vector(b, 0xC6A4A7935BD1E995ULL);
  const RasterImage v = probe_vector(b, 0x94D049BB133111EBULL);
  const RasterImage au = apply_a(u);
  const RasterImage av = apply_a(v);
  if (!(au.geometry() == b.geometry())) {
    throw OperatorError(detail::concat("CG operator maps ", b.geometry(), " to ", au.geometry()));
  }
  const double lhs = dot(au, v);
  const double rhs = dot(u, av);
  const double scale = std::max(norm(au) * norm(v), norm(u) * norm(av));
  if (std::abs(lhs - rhs) > 1e-8 * scale) {
    throw OperatorError(detail::concat("CG operator is not symmetric: <Au,v> = ", lhs, ", <u,Av> = ", rhs));
  }
}

}  // namespace

std::pair<RasterImage, SolverReport> conjugate_gradient(const LinearMap& apply_a, const RasterImage& b,
                                                        const RasterImage& x0, const SolverConfig& cfg) {
  validate(cfg);
  require_same_geometry(b.geometry(), x0.geometry(), "conjugate gradient start");
  check_symmetry(apply_a, b);

  SolverReport report;
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    report.stop_reason = StopReason::tolerance;
    return {b.with_samples(std::vector<double>(b.sample_count(), 0.0)), report};
  }

  const std::size_t n = b.sample_count();
  auto bs = b.samples();
  std::vector<double> x(x0.samples().begin(), x0.samples().end());
  std::vector<double> r(n), p(n);
  {
    const RasterImage ax = apply_a(b.with_samples(x));
    auto as = ax.samples();
    for (std::size_t i = 0; i < n; ++i) r[i] = bs[i] - as[i];
  }
  p = r;
  double rr = 0.0;
  for (double v : r) rr += v * v;

  auto record = [&] {
    double xr = 0.0, xb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xr += x[i] * r[i];
      xb += x[i] * bs[i];
    }
    report.energy.push_back(-0.5 * (xr + xb));
    report.primal_residual.push_back(std::sqrt(rr) / bnorm);
  };

  while (true) {
    if (std::sqrt(rr) / bnorm <= cfg.cg_tolerance) {
      report.stop_reason = StopReason::tolerance;
      break;
    }
    if (report.iterations >= cfg.cg_max_iterations) {
      report.stop_reason = StopReason::max_iterations;
      break;
    }
    const RasterImage ap_img = apply_a(b.with_samples(p));
    auto ap = ap_img.samples();
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (!(pap > 0.0)) {
      throw OperatorError(detail::concat("CG operator is not positive definite (p^T A p = ", pap, ")"));
    }
    const double alpha = rr / pap;
    double rr_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_next += r[i] * r[i];
    }
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    ++report.iterations;
    record();
  }
  return {b.with_samples(std::move(x)), report};
}

}  // namespace vcr
