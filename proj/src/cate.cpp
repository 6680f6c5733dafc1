#include "drcate/cate.hpp"

#include <algorithm>
#include <optional>

#include "drcate/errors.hpp"
#include "drcate/least_squares.hpp"
#include "drcate/rng.hpp"

namespace drcate {

CateFit estimate_from_pseudo(const PseudoOutcomeDraws& pseudo, const Matrix& v,
                             const BasisSpec& spec, const Matrix& query) {
  if (pseudo.z.cols() != v.rows()) {
    throw SchemaError("pseudo-outcomes and modifiers cover different numbers of units");
  }
  if (query.cols() != v.cols()) {
    throw SchemaError("query points have " + std::to_string(query.cols()) +
                      " columns, modifiers have " + std::to_string(v.cols()));
  }
  CateFit fit;
  fit.basis = DesignBasis::fit(v, spec);
  fit.design = fit.basis.transform(v);
  fit.query_design = fit.basis.transform(query);
  fit.extrapolated = fit.basis.count_extrapolated(query);
  if (fit.design.rows() < 2 * fit.design.cols()) {
    throw DomainError("second stage needs at least twice as many units (" +
                      std::to_string(fit.design.rows()) + ") as design columns (" +
                      std::to_string(fit.design.cols()) + ")");
  }
  const LeastSquares ols(fit.design);
  fit.coefficients = ols.coefficients(Matrix(pseudo.z.transpose())).transpose();
  fit.draws = fit.coefficients * fit.query_design.transpose();
  fit.point = fit.draws.colwise().mean().transpose();
  fit.z_bar = pseudo.z_bar;
  return fit;
}

CateFit estimate(const PosteriorDraws& draws, const Dataset& data, const BasisSpec& spec,
                 const Matrix& query) {
  return estimate_from_pseudo(build_pseudo_outcomes(data, draws), data.v(), spec, query);
}

std::array<std::vector<Index>, 2> split_halves(const Dataset& data, std::uint64_t seed,
                                               int attempt) {
  Rng rng(derive_seed(seed, {label(Stream::split), static_cast<std::uint64_t>(attempt)}));
  std::array<std::vector<Index>, 2> arms;
  for (Index i = 0; i < data.n(); ++i) arms[data.t()[i] == 1.0 ? 1 : 0].push_back(i);
  std::array<std::vector<Index>, 2> halves;
  bool odd_to_first = true;
  for (auto& arm : arms) {
    std::shuffle(arm.begin(), arm.end(), rng.engine());
    // Alternate which half absorbs an odd unit so the halves stay balanced.
    std::size_t first = arm.size() / 2;
    if (arm.size() % 2 == 1) {
      if (odd_to_first) ++first;
      odd_to_first = !odd_to_first;
    }
    halves[0].insert(halves[0].end(), arm.begin(), arm.begin() + static_cast<std::ptrdiff_t>(first));
    halves[1].insert(halves[1].end(), arm.begin() + static_cast<std::ptrdiff_t>(first), arm.end());
  }
  for (auto& h : halves) std::sort(h.begin(), h.end());
  return halves;
}

Vector combine_fold_points(const Vector& first, const Vector& second) {
  return 0.5 * (first + second);
}

CrossfitFit crossfit_estimate(const Dataset& data, const NuisanceFitter& fitter,
                              const BasisSpec& spec, const Matrix& query, std::uint64_t seed) {
  if (data.n() < 4 * data.q()) {
    throw DomainError("cross-fitting needs at least 4q units (n = " + std::to_string(data.n()) +
                      ", q = " + std::to_string(data.q()) + ")");
  }
  for (int attempt = 0; attempt < kMaxSplitAttempts; ++attempt) {
    auto halves = split_halves(data, seed, attempt);
    std::optional<Dataset> first, second;
    try {
      first.emplace(data.subset(halves[0]));
      second.emplace(data.subset(halves[1]));
    } catch (const DomainError&) {
      continue;
    }
    const auto draws_on_second = fitter(*first, *second, derive_seed(seed, {label(Stream::split), 100, 0}));
    const auto draws_on_first = fitter(*second, *first, derive_seed(seed, {label(Stream::split), 100, 1}));
    CateFit f0 = estimate(draws_on_second, *second, spec, query);
    CateFit f1 = estimate(draws_on_first, *first, spec, query);
    Vector point = combine_fold_points(f0.point, f1.point);
    return CrossfitFit{{std::move(f0), std::move(f1)},
                       std::move(halves),
                       {std::move(*second), std::move(*first)},
                       std::move(point),
                       attempt + 1};
  }
  throw DomainError("could not find a split with both treatment arms in each half after " +
                    std::to_string(kMaxSplitAttempts) + " attempts");
}

}  // namespace drcate
