#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vcr/raster.hpp"

namespace vcr {

class ExternalDenoiser;

enum class PriorKind { tv, laplacian_quadratic, l1_synthesis, median, nlm, external };

const char* to_string(PriorKind kind) noexcept;

/// Isotropic TV, forward differences. As a denoiser the prox weight is strength * sigma^2.
struct TvPrior {
  std::size_t iterations = 100;
  double dual_step = 0.125;
  double strength = 1.0;
};

/// g(u) = 1/2 ||Q u||^2 with Q the 5-point Laplacian. Denoiser weight strength * sigma^2.
struct LaplacianPrior {
  double strength = 1.0;
  std::size_t cg_iterations = 500;
};

/// Per-pixel spectral synthesis prior u = D alpha with l1 penalty on alpha.
/// Dictionary rows = bands, columns = atoms. Denoiser weight strength * sigma^2.
struct L1SynthesisPrior {
  BandMatrix dictionary = BandMatrix::identity(1);
  std::size_t iterations = 200;
  double strength = 1.0;
};

/// Ignores sigma.
struct MedianPrior {
  std::size_t radius = 1;
};

/// Filtering strength h = h_factor * sigma * sqrt(patch pixel count).
struct NlmPrior {
  std::size_t patch_radius = 1;
  std::size_t search_radius = 5;
  double h_factor = 0.4;
};

/// Child process speaking PNP1 on stdin/stdout; sigma is forwarded verbatim.
struct ExternalPrior {
  std::string command;
  std::chrono::milliseconds timeout{30000};
};

/// A denoiser or proximal prior: the g(.) slot of a splitting solver.
///
/// Built-in kinds are pure values. An external handle owns one child process,
/// started on first use and shared by copies of the handle; calls through it
/// are serialized.
class PriorHandle {
 public:
  PriorHandle(TvPrior p);
  PriorHandle(LaplacianPrior p);
  PriorHandle(L1SynthesisPrior p);
  PriorHandle(MedianPrior p);
  PriorHandle(NlmPrior p);
  PriorHandle(ExternalPrior p);

  PriorKind kind() const noexcept;
  /// tv, laplacian-quadratic and l1-synthesis: prox() and value() are available.
  bool is_explicit() const noexcept;

  const auto& params() const noexcept { return params_; }
  ExternalDenoiser* external() const noexcept { return external_.get(); }

 private:
  std::variant<TvPrior, LaplacianPrior, L1SynthesisPrior, MedianPrior, NlmPrior, ExternalPrior> params_;
  std::shared_ptr<ExternalDenoiser> external_;
};

/// Same-geometry denoised raster. sigma is the noise standard deviation in image units.
RasterImage denoise(const PriorHandle& prior, const RasterImage& img, double sigma);

/// argmin_u 1/2 ||u - img||^2 + tau g(u) for explicit priors; ConfigError otherwise.
RasterImage prox(const PriorHandle& prior, const RasterImage& img, double tau);

/// g(u) for explicit priors. l1-synthesis requires a square orthonormal dictionary.
double prior_value(const PriorHandle& prior, const RasterImage& img);

/// True when prior_value() is defined for rasters with this many bands.
bool has_value(const PriorHandle& prior, std::size_t bands);

// ---- total variation ---------------------------------------------------------------

struct GradientField {
  RasterImage dx;
  RasterImage dy;
};

/// Forward differences per band; the last column/row difference is zero.
GradientField forward_gradient(const RasterImage& img);
/// Adjoint of forward_gradient (i.e. minus the discrete divergence).
RasterImage forward_gradient_adjoint(const GradientField& field);

/// Isotropic TV, summed over bands.
double tv_value(const RasterImage& img);
/// sum sqrt(|grad u|^2 + eps^2).
double smooth_tv_value(const RasterImage& img, double eps);
RasterImage smooth_tv_gradient(const RasterImage& img, double eps);

/// Approximately solves argmin_u 1/2 ||u - img||^2 + weight TV(u) by fast dual
/// projected gradient. Returns the iterate with the lowest primal objective seen,
/// so the result never scores worse than the input; weight 0 returns img.
RasterImage tv_prox(const RasterImage& img, double weight, std::size_t iterations, double dual_step = 0.125);

/// 1/2 ||u - f||^2 + weight TV(u)
double tv_prox_objective(const RasterImage& u, const RasterImage& f, double weight);

// ---- sparsity --------------------------------------------------------------------

std::vector<double> soft_threshold(std::span<const double> values, double tau);
double soft_threshold(double value, double tau) noexcept;

struct SparseCode {
  std::vector<double> coefficients;
  /// Objective before the first iteration, then after each.
  std::vector<double> objective;
};

/// ISTA on 1/2 ||signal - D alpha||^2 + lambda ||alpha||_1 from alpha = 0,
/// step 1/||D||^2 (power-iteration estimate). Throws DomainError for a zero dictionary.
SparseCode ista_sparse_code(std::span<const double> signal, const BandMatrix& dictionary, double lambda,
                            std::size_t iterations);

double sparse_objective(std::span<const double> signal, const BandMatrix& dictionary,
                        std::span<const double> alpha, double lambda);

/// Largest squared singular value of D via power iteration on D^T D.
double spectral_norm_squared(const BandMatrix& dictionary);

// ---- smoothing stencils -----------------------------------------------------------------

/// 5-point Laplacian per band with symmetric boundary; self-adjoint.
RasterImage laplacian_apply(const RasterImage& img);

RasterImage median_filter(const RasterImage& img, std::size_t radius);
RasterImage nlm_filter(const RasterImage& img, std::size_t patch_radius, std::size_t search_radius, double h);

}  // namespace vcr
