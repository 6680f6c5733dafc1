#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "drcate/dataset.hpp"
#include "drcate/types.hpp"

namespace drcate {

inline constexpr Index kMaxDraws = 1'000'000;

// Weakly informative Gaussian prior on standardized covariates. The outcome
// model uses the conjugate form beta | sigma^2 ~ N(0, sigma^2 * diag(scale^2)),
// sigma^2 ~ InvGamma(shape, rate); the probit model uses N(0, diag(scale^2)).
struct GlmPrior {
  double coef_scale = 2.5;
  double intercept_scale = 10.0;
  double shape = 1.0;
  double rate = 1.0;
  // Divide y by its population SD before sampling so the prior scales are
  // unit-free; draws are reported on the original scale.
  bool autoscale_outcome = true;

  void validate() const;
};

// Continuous two-component mixture beta_j ~ N(0, spike^2) or N(0, slab^2)
// with inclusion probability theta ~ Beta(a, b). `inclusion_b` defaults to the
// number of selectable coefficients.
struct SpikeSlabPrior {
  double spike_sd = 0.001;
  double slab_sd = 1.0;
  double inclusion_a = 1.0;
  std::optional<double> inclusion_b;
  double shape = 1.0;
  double rate = 1.0;
  bool autoscale_outcome = true;

  void validate() const;
};

struct McmcOptions {
  Index burnin = 500;
  Index draws = 500;

  void validate() const;
};

// Which covariates a nuisance model sees. `intercept_only` deliberately
// misspecifies the model.
enum class Terms { full, intercept_only };

// Outcome design [1, T, X, T*V_{-1}] evaluated with every treatment set to
// `treatment` (or the observed treatment when empty).
Matrix outcome_design(const Dataset& data, Terms terms, std::optional<double> treatment = {});
// Propensity design [1, X].
Matrix propensity_design(const Dataset& data, Terms terms);

struct OutcomeDraws {
  Matrix m1;  // B x n
  Matrix m0;  // B x n
};

struct PropensityDraws {
  Matrix p1;  // B x n, unclipped
  Index separation_warnings = 0;
};

// Coefficient draws of the outcome regression, on the original y scale.
struct OutcomePosterior {
  Terms terms = Terms::full;
  Matrix coefficients;  // B x k
  Vector sigma2;        // B
  Vector inclusion;     // posterior inclusion probability per column (spike-and-slab only)

  OutcomeDraws predict(const Dataset& data) const;
};

struct PropensityPosterior {
  Terms terms = Terms::full;
  Matrix coefficients;  // B x k
  Vector inclusion;
  Index separation_warnings = 0;

  PropensityDraws predict(const Dataset& data) const;
};

// Aligned per-unit nuisance draws. p0 = 1 - p1 exactly, p1 clipped into
// [clip_lo, 1 - clip_lo].
struct PosteriorDraws {
  Matrix p1;
  Matrix p0;
  Matrix m1;
  Matrix m0;
  double clip_lo = 0.01;
  Index clip_count = 0;
  Index separation_warnings = 0;

  Index draws() const noexcept { return p1.rows(); }
  Index units() const noexcept { return p1.cols(); }
};

// Validates shapes and ranges, clips propensities and fills p0.
PosteriorDraws make_posterior_draws(Matrix p1, Matrix m1, Matrix m0, double clip_lo,
                                    Index separation_warnings = 0);
PosteriorDraws make_posterior_draws(PropensityDraws propensity, OutcomeDraws outcome,
                                    double clip_lo);

// Gibbs sampler for the conjugate normal / inverse-gamma linear outcome model.
OutcomePosterior fit_linear_outcome(const Dataset& data, const GlmPrior& prior,
                                    const McmcOptions& mcmc, std::uint64_t seed,
                                    Terms terms = Terms::full);

// Albert-Chib latent-Gaussian Gibbs sampler for the probit propensity model.
PropensityPosterior fit_probit_propensity(const Dataset& data, const GlmPrior& prior,
                                          const McmcOptions& mcmc, std::uint64_t seed,
                                          Terms terms = Terms::full);

// George-McCulloch spike-and-slab Gibbs samplers. Intercept and treatment
// main effect always use the slab.
OutcomePosterior fit_spike_slab_linear(const Dataset& data, const SpikeSlabPrior& prior,
                                       const McmcOptions& mcmc, std::uint64_t seed,
                                       Terms terms = Terms::full);
PropensityPosterior fit_spike_slab_probit(const Dataset& data, const SpikeSlabPrior& prior,
                                          const McmcOptions& mcmc, std::uint64_t seed,
                                          Terms terms = Terms::full);

// Reads B x n headerless CSV matrices produced by an external sampler.
PosteriorDraws import_external_draws(const std::filesystem::path& p1_file,
                                     const std::filesystem::path& m1_file,
                                     const std::filesystem::path& m0_file, double clip_lo);

// Standard normal CDF.
double normal_cdf(double x);

namespace detail {
// Full column rank check shared by the samplers.
void require_full_rank(const Matrix& design, const char* what);
double population_sd(const Vector& y);
}  // namespace detail

}  // namespace drcate
