#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vcr/operators.hpp"
#include "vcr/priors.hpp"
#include "vcr/raster.hpp"

namespace vcr {

enum class Algorithm { gd, hqs, admm, cg };
enum class StopReason { tolerance, max_iterations, diverged };
/// What a plugged denoiser receives as its noise level: sqrt(lambda / 2 rho) or lambda / 2 rho.
enum class NoiseArg { std_dev, variance };

const char* to_string(Algorithm a) noexcept;
const char* to_string(StopReason r) noexcept;
const char* to_string(NoiseArg n) noexcept;

struct SolverConfig {
  Algorithm algorithm = Algorithm::hqs;
  std::size_t max_iterations = 50;
  /// Relative iterate change ||x+ - x|| / max(||x||, 1).
  double tolerance = 1e-4;
  /// Gradient-descent step.
  double step = 0.1;
  /// Splitting penalty schedule: rho <- min(rho_growth * rho, rho_max).
  double rho0 = 1.0;
  double rho_growth = 1.2;
  /// 0 means 1e6 * rho0.
  double rho_max = 0.0;
  std::size_t cg_max_iterations = 500;
  double cg_tolerance = 1e-10;
  NoiseArg noise_arg = NoiseArg::std_dev;
  /// Gradient descent only: a step that raises the energy is rejected and the
  /// step size halved instead of being taken.
  bool monotone_step = false;
};

void validate(const SolverConfig& cfg);
double effective_rho_max(const SolverConfig& cfg) noexcept;

struct SolverReport {
  std::size_t iterations = 0;
  std::vector<double> energy;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
  /// Additional per-iteration traces keyed by name.
  std::map<std::string, std::vector<double>> traces;
  StopReason stop_reason = StopReason::max_iterations;
};

// ---- problem definition --------------------------------------------------------------

/// (weight / 2) || M (A x - y) ||^2, M = validity mask of the observation.
struct QuadraticFidelity {
  LinearOperator op;
  RasterImage observation;
  double weight = 1.0;
};

/// weight * sum (log x + y / x) over valid pixels.
struct GammaFidelity {
  RasterImage observation;
  double weight = 1.0;
};

using Fidelity = std::variant<QuadraticFidelity, GammaFidelity>;

/// sum sqrt(|grad x|^2 + eps^2)
struct SmoothTvTerm {
  double epsilon = 1e-2;
};
/// 1/2 ||Q x||^2
struct LaplacianTerm {};
/// Non-differentiable prior; only valid as the split term of HQS/ADMM.
struct PriorTerm {
  PriorHandle prior;
};

struct Regularizer {
  std::variant<SmoothTvTerm, LaplacianTerm, PriorTerm> term;
  double weight = 1.0;
};

/// f(x) + sum of regularizers, plus lambda g(V) when a splitting solver binds
/// a prior to the auxiliary variable (lambda = split_weight).
struct ProblemSpec {
  std::vector<Fidelity> fidelities;
  std::vector<Regularizer> regularizers;
  std::optional<double> split_weight;
};

/// Throws ConfigError on an invalid combination. `splitting` requires split_weight.
void validate(const ProblemSpec& spec, const Geometry& x_geometry, bool splitting);

/// Smooth part of the energy (fidelities + differentiable regularizers).
double smooth_energy(const ProblemSpec& spec, const RasterImage& x);
RasterImage smooth_energy_gradient(const ProblemSpec& spec, const RasterImage& x);

// ---- solvers ---------------------------------------------------------------------------

using LinearMap = std::function<RasterImage(const RasterImage&)>;
/// In-place projection applied after every gradient step (e.g. positivity floor).
using Projection = std::function<void(std::span<double>)>;

/// x <- x - step * grad E(x). Flags divergence after 5 consecutive energy increases.
std::pair<RasterImage, SolverReport> gradient_descent(const ProblemSpec& spec, const RasterImage& x0,
                                                      const SolverConfig& cfg, const Projection& project = {});

/// Solves A x = b for symmetric positive definite A. The energy trace holds
/// 1/2 <x, Ax> - <b, x> (the A-norm error up to a constant); primal_residual
/// holds ||Ax - b|| / ||b||. Throws OperatorError when a symmetry probe fails.
std::pair<RasterImage, SolverReport> conjugate_gradient(const LinearMap& apply_a, const RasterImage& b,
                                                        const RasterImage& x0, const SolverConfig& cfg);

/// Half-quadratic splitting with X = V. X-step: min f(X) + rho ||X - V||^2;
/// V-step: prox (explicit priors) or denoise at sigma^2 = lambda / (2 rho).
std::pair<RasterImage, SolverReport> hqs_solve(const ProblemSpec& spec, const RasterImage& x0,
                                               const SolverConfig& cfg, const PriorHandle& prior);

/// ADMM with scaled multiplier W: penalty rho ||X - V + W||^2, W <- W + X - V.
std::pair<RasterImage, SolverReport> admm_solve(const ProblemSpec& spec, const RasterImage& x0,
                                                const SolverConfig& cfg, const PriorHandle& prior);

/// Full energy f(x) + regs + lambda g(x); requires an explicit prior.
double splitting_energy(const ProblemSpec& spec, const RasterImage& x, const PriorHandle& prior);

/// Max over a random subset (at least 32 coordinates, all when fewer) of
/// |fd - analytic| / max(1, |analytic|), fd the central difference with step h.
double finite_difference_gradient_check(const ProblemSpec& spec, const RasterImage& x, double h,
                                        std::uint64_t seed = 0x5eed);

// ---- pointwise Gamma proximal step -----------------------------------------------------

struct GammaProxPoint {
  double x = 0.0;
  /// |penalty x^3 - penalty v x^2 + lambda x - lambda y|
  double cubic_residual = 0.0;
  bool clamped = false;
};

/// argmin_{x >= floor} lambda (log x + y / x) + (penalty / 2)(x - v)^2.
/// Every real root of the stationarity cubic is located by bracketed Newton
/// on its monotone pieces; the candidate with the lowest objective wins.
GammaProxPoint gamma_prox(double y, double v, double lambda, double penalty, double floor);

double gamma_cubic(double x, double y, double v, double lambda, double penalty) noexcept;

}  // namespace vcr
