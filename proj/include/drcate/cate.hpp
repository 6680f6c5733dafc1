#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "drcate/basis.hpp"
#include "drcate/dataset.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/pseudo.hpp"
#include "drcate/types.hpp"

namespace drcate {

// Posterior-mean CATE fit: one OLS of each pseudo-outcome draw on the
// second-stage design, evaluated at the query rows.
struct CateFit {
  DesignBasis basis;
  Matrix design;        // n x q'
  Matrix query_design;  // r x q'
  Matrix coefficients;  // B x q'
  Matrix draws;         // B x r, per-draw query evaluations
  Vector point;         // r, mean over draws
  Vector z_bar;         // n, posterior-mean pseudo-outcome
  Index extrapolated = 0;

  Index draw_count() const noexcept { return draws.rows(); }
};

// `query` holds modifier rows in the same layout as data.v() (intercept first).
CateFit estimate(const PosteriorDraws& draws, const Dataset& data, const BasisSpec& spec,
                 const Matrix& query);

CateFit estimate_from_pseudo(const PseudoOutcomeDraws& pseudo, const Matrix& v,
                             const BasisSpec& spec, const Matrix& query);

// Fits nuisance posteriors on `train` and returns draws for the units of `eval`.
using NuisanceFitter =
    std::function<PosteriorDraws(const Dataset& train, const Dataset& eval, std::uint64_t seed)>;

inline constexpr int kMaxSplitAttempts = 20;

struct CrossfitFit {
  // folds[0]: nuisances from the first half, CATE on the second; folds[1] swapped.
  std::array<CateFit, 2> folds;
  std::array<std::vector<Index>, 2> halves;
  std::array<Dataset, 2> eval_data;
  Vector point;  // average of the two fold estimates
  int attempts = 1;
};

// Random half split stratified by treatment arm. Each half must form a valid
// Dataset; otherwise the split is redrawn up to kMaxSplitAttempts times.
std::array<std::vector<Index>, 2> split_halves(const Dataset& data, std::uint64_t seed,
                                               int attempt);

CrossfitFit crossfit_estimate(const Dataset& data, const NuisanceFitter& fitter,
                              const BasisSpec& spec, const Matrix& query, std::uint64_t seed);

Vector combine_fold_points(const Vector& first, const Vector& second);

}  // namespace drcate
