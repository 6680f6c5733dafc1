#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drcate/basis.hpp"
#include "drcate/dataset.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/types.hpp"
#include "drcate/variance.hpp"

namespace drcate {

enum class NuisanceFamily { linear, spike_slab, external };

struct MethodSpec {
  std::string name;
  NuisanceFamily family = NuisanceFamily::linear;
  bool baseline = false;
  bool crossfit = false;
};

// Accepts DR-Linear, DR-SpikeSlab, DR-External and DML-Baseline, each
// optionally suffixed with -CF for two-fold cross-fitting (DR methods only).
MethodSpec parse_method(std::string_view name);
std::vector<MethodSpec> parse_methods(const std::vector<std::string>& names);

struct EstimatorOptions {
  Terms outcome_terms = Terms::full;
  Terms propensity_terms = Terms::full;
  GlmPrior glm;
  SpikeSlabPrior spike_slab;
  McmcOptions mcmc;
  double clip = 0.01;
  Index resamples = kDefaultResamples;
  double level = 0.95;
  BasisSpec basis;
  // Nuisance family behind DML-Baseline.
  NuisanceFamily baseline_family = NuisanceFamily::linear;
  // Standardize confounders before fitting nuisance models.
  bool standardize = true;

  void validate() const;
};

struct MethodResult {
  std::string method;
  Vector estimate;
  Vector se;
  Vector lower;
  Vector upper;
  Vector bootstrap_term;
  Vector posterior_term;
  Index clip_count = 0;
  Index separation_warnings = 0;
  Index redraws = 0;
  Index ridged = 0;
  Index extrapolated = 0;
};

// Nuisance posterior draws for one family, fitted on `train` and evaluated
// on `eval` (which may be the same dataset).
PosteriorDraws fit_nuisances(const Dataset& train, const Dataset& eval, NuisanceFamily family,
                             const EstimatorOptions& options, std::uint64_t seed);

// Runs methods on one dataset. Nuisance draws are shared between methods of
// the same family, so DR-Linear and DML-Baseline see identical posteriors.
class Pipeline {
 public:
  Pipeline(Dataset data, EstimatorOptions options, std::uint64_t seed,
           std::optional<PosteriorDraws> external = {});

  MethodResult run(const MethodSpec& method, const Matrix& query);

  // Reuses this pipeline's nuisance draws with a different second stage.
  // `second_stage` must hold the same units; cross-fitting is not available.
  MethodResult run_second_stage(const MethodSpec& method, const Dataset& second_stage,
                                const BasisSpec& basis, const Matrix& query);

  const Dataset& data() const noexcept { return data_; }
  const EstimatorOptions& options() const noexcept { return options_; }

 private:
  const PosteriorDraws& draws(NuisanceFamily family);

  Dataset data_;
  EstimatorOptions options_;
  std::uint64_t seed_;
  std::map<NuisanceFamily, PosteriorDraws> cache_;
};

}  // namespace drcate
