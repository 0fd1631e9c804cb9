#include <cmath>

#include "vcr/error.hpp"
#include "vcr/priors.hpp"

namespace vcr {

double soft_threshold(double value, double tau) noexcept {
  const double mag = std::abs(value) - tau;
  if (mag <= 0.0) return 0.0;
  return value > 0.0 ? mag : -mag;
}

std::vector<double> soft_threshold(std::span<const double> values, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("soft threshold needs tau >= 0");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = soft_threshold(values[i], tau);
  return out;
}

double spectral_norm_squared(const BandMatrix& d) {
  const std::size_t m = d.rows(), k = d.cols();
  std::vector<double> v(k), dv(m), next(k);
  for (std::size_t j = 0; j < k; ++j) v[j] = 1.0 + 0.01 * static_cast<double>(j);
  double estimate = 0.0;
  for (int it = 0; it < 1000; ++it) {
    double nv = 0.0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    if (nv == 0.0) return 0.0;
    for (auto& x : v) x /= nv;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += d(i, j) * v[j];
      dv[i] = s;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += d(i, j) * dv[i];
      next[j] = s;
    }
    double rayleigh = 0.0;
    for (std::size_t j = 0; j < k; ++j) rayleigh += v[j] * next[j];
    v.swap(next);
    if (std::abs(rayleigh - estimate) <= 1e-14 * std::abs(rayleigh)) {
      estimate = rayleigh;
      break;
    }
    estimate = rayleigh;
  }
  return estimate;
}

double sparse_objective(std::span<const double> signal, const BandMatrix& d, std::span<const double> alpha,
                        double lambda) {
  double fit = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double r = signal[i];
    for (std::size_t j = 0; j < d.cols(); ++j) r -= d(i, j) * alpha[j];
    fit += r * r;
  }
  double l1 = 0.0;
  for (double a : alpha) l1 += std::abs(a);
  return 0.5 * fit + lambda * l1;
}

SparseCode ista_sparse_code(std::span<const double> signal, const BandMatrix& d, double lambda,
                            std::size_t iterations) {
  if (signal.size() != d.rows()) {
    throw GeometryError(detail::concat("signal length ", signal.size(), " does not match dictionary rows ", d.rows()));
  }
  if (!(lambda >= 0.0)) throw ConfigError("sparse coding lambda must be >= 0");
  if (iterations < 1) throw ConfigError("sparse coding needs iterations >= 1");
  const double lip = spectral_norm_squared(d);
  if (!(lip > 0.0)) throw DomainError("dictionary has zero norm");
  const double step = 1.0 / lip;

  const std::size_t m = d.rows(), k = d.cols();
  SparseCode code;
  code.coefficients.assign(k, 0.0);
  code.objective.reserve(iterations + 1);
  code.objective.push_back(sparse_objective(signal, d, code.coefficients, lambda));

  std::vector<double> residual(m), grad(k);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double r = -signal[i];
      for (std::size_t j = 0; j < k; ++j) r += d(i, j) * code.coefficients[j];
      residual[i] = r;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += d(i, j) * residual[i];
      grad[j] = s;
    }
    for (std::size_t j = 0; j < k; ++j) {
      code.coefficients[j] = soft_threshold(code.coefficients[j] - step * grad[j], step * lambda);
    }
    code.objective.push_back(sparse_objective(signal, d, code.coefficients, lambda));
  }
  return code;
}

}  // namespace vcr
