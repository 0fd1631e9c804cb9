#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "vcr/operators.hpp"
#include "vcr/priors.hpp"
#include "vcr/raster.hpp"
#include "vcr/solvers.hpp"

namespace vcr {

// ---- SAR despeckling -------------------------------------------------------------------------

enum class XStepMethod { cubic, gradient };

/// HQS on lambda sum(log x + y/x) + g(V) + rho/2 ||X - V||^2, V = X.
/// The denoiser runs at sigma_t^2 = 1 / rho_t; the X-step is pointwise.
struct DespeckleConfig {
  double lambda = 1.0;
  SolverConfig solver{};
  PriorHandle prior = TvPrior{};
  double floor = 1e-6;
  XStepMethod x_step = XStepMethod::cubic;
  /// Inner steps for the gradient X-step (step size solver.step).
  std::size_t gradient_steps = 50;
};

void validate(const DespeckleConfig& cfg);

/// Report traces: "cubic_residual" (worst per iteration), "clamped" (pixel count), "rho".
/// Energy holds lambda F(X) + TV(V) + rho/2 ||X - V||^2 when the prior is tv.
std::pair<RasterImage, SolverReport> despeckle_pnp(const RasterImage& y, const DespeckleConfig& cfg);

/// Gradient descent on lambda sum(log x + y/x) + TV_eps(x), iterates clamped to x >= floor.
/// Steps that raise the energy are halved; after an accepted step the size may grow
/// back up to solver.step.
std::pair<RasterImage, SolverReport> despeckle_aa_tv(const RasterImage& y, double lambda, const SolverConfig& cfg,
                                                     double tv_epsilon = 1e-2, double floor = 1e-6);

// ---- hyperspectral mixed-noise denoising ---------------------------------------------------------

/// ADMM on 1/2 ||Y - X - S - N||^2 + lambda_s ||S||_1 + beta/2 ||N||^2 + tau g(Z), X = Z.
/// An unset lambda_s / beta drops the S / N component.
struct HsiDenoiseConfig {
  double tau = 1.0;
  std::optional<double> lambda_s;
  std::optional<double> beta;
  PriorHandle prior = TvPrior{};
  SolverConfig solver{};
};

void validate(const HsiDenoiseConfig& cfg);

struct HsiDecomposition {
  RasterImage x;
  RasterImage sparse;
  RasterImage gaussian;
};

/// Traces: "primal" ||X - Z||, "dual" 2 rho ||Z - Z_prev||, "fidelity" ||Y - X - S - N||, "change".
/// Energy is the model objective at X (the prior term only for explicit priors).
std::pair<HsiDecomposition, SolverReport> hsi_denoise_pnp(const RasterImage& y, const HsiDenoiseConfig& cfg);

// ---- fusion -----------------------------------------------------------------------------------------

/// y: low-resolution HSI (S bands); z: high-resolution MSI (s bands);
/// h_op: maps the (W, H, S) target to y's geometry; srf: s x S spectral response.
struct FusionInputs {
  RasterImage y;
  RasterImage z;
  LinearOperator h_op;
  BandMatrix srf;
  double gamma = 1.0;
  double lambda = 0.0;
  std::optional<std::size_t> subspace;
};

void validate(const FusionInputs& in);

/// Replicates each pixel into a factor x factor block.
RasterImage replicate_upsample(const RasterImage& img, std::size_t factor);

/// Rows of the result span the dominant spectral subspace of img (L x bands,
/// orthonormal rows). An unset rank picks the smallest L holding 99.9% of the
/// energy, capped at 12. Throws SubspaceError when img has lower rank than requested.
BandMatrix estimate_subspace(const RasterImage& img, std::optional<std::size_t> rank);

/// Max |psi psi^T - I|.
double orthonormality_error(const BandMatrix& psi);

/// CG on (H^T H + gamma sum_j D_j^T D_j + lambda Q^2) X = H^T Y + gamma sum_j D_j^T G_j.
/// Trace "normal_residual" holds ||A x - b|| / ||b|| at the returned point.
std::pair<RasterImage, SolverReport> fuse_dlvm(const FusionInputs& in, const RasterImage& g1, const RasterImage& g2,
                                               const SolverConfig& cfg);

/// Gradient priors from a high-resolution guide: the band mean of z is
/// differentiated and rescaled per target band by mean(y_b) / mean(guide).
GradientField transplant_gradients(const FusionInputs& in);

/// ADMM over the coefficient planes alpha (X = Psi alpha): quadratic step by CG,
/// V = denoise(alpha + W, sigma_t), W += alpha - V. Trace "orthonormality".
std::pair<RasterImage, SolverReport> fuse_cnnfus(const FusionInputs& in, const PriorHandle& prior,
                                                 const SolverConfig& cfg);

// ---- model-constrained losses -----------------------------------------------------------------------

struct LossBreakdown {
  std::map<std::string, double> terms;
  double total = 0.0;
};

/// ||Y - A X||^2 + lambda TV(X) + beta ||X - X_label||_F (label norm not squared).
struct RestorationLoss {
  RasterImage y;
  LinearOperator op;
  double lambda = 0.0;
  double beta = 0.0;
  std::optional<RasterImage> label;
};

/// ||Z - P X||^2 + ||Y - D(k * X)||^2 + lambda (||k||^2 + ||P||^2); k is an odd square kernel.
struct BlindFusionLoss {
  RasterImage z;
  RasterImage y;
  BandMatrix srf;
  BandMatrix kernel;
  std::size_t ratio = 1;
  double lambda = 0.0;
};

LossBreakdown evaluate_model_loss(const RasterImage& x, const RestorationLoss& loss);
LossBreakdown evaluate_model_loss(const RasterImage& x, const BlindFusionLoss& loss);

/// 2-D correlation of every band with an odd square kernel, symmetric boundary.
RasterImage convolve(const RasterImage& img, const BandMatrix& kernel);

}  // namespace vcr
