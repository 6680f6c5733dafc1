#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "drcate/basis.hpp"
#include "drcate/cate.hpp"
#include "drcate/dataset.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/types.hpp"

namespace drcate {

inline constexpr Index kDefaultResamples = 250;
inline constexpr int kMaxResampleRedraws = 10;
inline constexpr double kRidgeJitter = 1e-8;

struct VarianceBreakdown {
  Vector bootstrap_term;
  Vector posterior_term;
  Vector total;
  Index resamples = 0;
  Index draws = 0;
  Index redraws = 0;  // singular resamples that were redrawn
  Index ridged = 0;   // resamples solved with ridge jitter
};

struct IntervalEstimate {
  double point = 0.0;
  double se = 0.0;
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
};

// Sample variance (divisor B - 1) of each column of the B x r draw matrix.
Vector posterior_variance_term(const Matrix& query_draws);

// Row indices of one bootstrap resample; `attempt` > 0 asks for a redraw.
using ResampleSource = std::function<std::vector<Index>(Index resample, int attempt)>;

// Uniform draws with replacement from a stream derived from (seed, resample, attempt).
ResampleSource seeded_resamples(Index n, std::uint64_t seed);

struct BootstrapResult {
  Vector variance;
  Index redraws = 0;
  Index ridged = 0;
};

// Variance across M resamples of the OLS fit of z_bar on the resampled design
// rows, evaluated at the query rows. The design columns (including spline
// knots) stay fixed across resamples.
BootstrapResult bootstrap_variance_term(const Vector& z_bar, const Matrix& design,
                                        const Matrix& query_design, Index resamples,
                                        const ResampleSource& source);
BootstrapResult bootstrap_variance_term(const Vector& z_bar, const Matrix& design,
                                        const Matrix& query_design, Index resamples,
                                        std::uint64_t seed);

VarianceBreakdown variance_estimate(const CateFit& fit, Index resamples, std::uint64_t seed);

// Two-fold rule: each term is (first + second) / 4.
VarianceBreakdown combine_crossfit(const VarianceBreakdown& first,
                                   const VarianceBreakdown& second);

// Two-sided normal quantile z with P(|N(0,1)| <= z) = level.
double normal_quantile(double level);

IntervalEstimate confidence_interval(double point, double total_variance, double level = 0.95);

struct PointwiseIntervals {
  Vector point;
  Vector se;
  Vector lower;
  Vector upper;
  double level = 0.95;

  IntervalEstimate at(Index j) const { return {point[j], se[j], level, lower[j], upper[j]}; }
};

PointwiseIntervals confidence_intervals(const Vector& point, const Vector& total_variance,
                                        double level = 0.95);

struct BaselineFit {
  PointwiseIntervals intervals;
  Vector pseudo;  // plug-in pseudo-outcome
  Index extrapolated = 0;
};

// Plug-in comparator: one pseudo-outcome from posterior-mean nuisances, OLS on
// the second-stage design and an HC0 sandwich variance at each query row.
BaselineFit dml_baseline(const Dataset& data, const PosteriorDraws& draws, const BasisSpec& spec,
                         const Matrix& query, double level = 0.95);

// HC0 sandwich variance of OLS query predictions for response z.
Vector sandwich_variance(const Matrix& design, const Matrix& query_design, const Vector& z);

}  // namespace drcate
