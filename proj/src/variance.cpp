#include "drcate/variance.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "drcate/errors.hpp"
#include "drcate/least_squares.hpp"
#include "drcate/pseudo.hpp"
#include "drcate/rng.hpp"

namespace drcate {

namespace {

Vector column_variance(const Matrix& values) {
  const Index rows = values.rows();
  const RowVector mean = values.colwise().mean();
  return ((values.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(rows - 1))
      .transpose();
}

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

Vector posterior_variance_term(const Matrix& query_draws) {
  if (query_draws.rows() < 2) {
    throw ConfigError("posterior variance needs at least 2 draws, got " +
                      std::to_string(query_draws.rows()));
  }
  return column_variance(query_draws);
}

ResampleSource seeded_resamples(Index n, std::uint64_t seed) {
  return [n, seed](Index resample, int attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(resample),
                               static_cast<std::uint64_t>(attempt)}));
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    return rows;
  };
}

BootstrapResult bootstrap_variance_term(const Vector& z_bar, const Matrix& design,
                                        const Matrix& query_design, Index resamples,
                                        const ResampleSource& source) {
  if (resamples < 2) {
    throw ConfigError("bootstrap needs at least 2 resamples, got " + std::to_string(resamples));
  }
  if (z_bar.size() != design.rows()) {
    throw SchemaError("pseudo-outcome length does not match the design rows");
  }
  if (design.rows() < design.cols()) {
    throw DomainError("bootstrap needs at least as many units as design columns");
  }
  if (query_design.cols() != design.cols()) {
    throw SchemaError("query design width does not match the design");
  }
  BootstrapResult result;
  const Index cols = design.cols();
  Matrix evaluations(resamples, query_design.rows());
  for (Index m = 0; m < resamples; ++m) {
    Vector beta;
    bool solved = false;
    std::vector<Index> rows;
    for (int attempt = 0; attempt <= kMaxResampleRedraws; ++attempt) {
      rows = source(m, attempt);
      const Matrix vm = gather_rows(design, rows);
      const Eigen::ColPivHouseholderQR<Matrix> qr = [&] {
        Eigen::ColPivHouseholderQR<Matrix> f(vm.rows(), vm.cols());
        f.setThreshold(kRankTolerance);
        f.compute(vm);
        return f;
      }();
      if (qr.rank() == cols) {
        Vector zm(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) zm[static_cast<Index>(i)] = z_bar[rows[i]];
        beta = qr.solve(zm);
        solved = true;
        break;
      }
      if (attempt < kMaxResampleRedraws) ++result.redraws;
    }
    if (!solved) {
      // Last redraw is still singular: ridge-augmented least squares.
      const Matrix vm = gather_rows(design, rows);
      const double lambda = kRidgeJitter * (vm.transpose() * vm).diagonal().mean();
      Matrix augmented(vm.rows() + cols, cols);
      augmented << vm, std::sqrt(lambda) * Matrix::Identity(cols, cols);
      Vector response = Vector::Zero(vm.rows() + cols);
      for (std::size_t i = 0; i < rows.size(); ++i) response[static_cast<Index>(i)] = z_bar[rows[i]];
      beta = augmented.colPivHouseholderQr().solve(response);
      ++result.ridged;
    }
    evaluations.row(m) = (query_design * beta).transpose();
  }
  result.variance = column_variance(evaluations);
  return result;
}

BootstrapResult bootstrap_variance_term(const Vector& z_bar, const Matrix& design,
                                        const Matrix& query_design, Index resamples,
                                        std::uint64_t seed) {
  return bootstrap_variance_term(z_bar, design, query_design, resamples,
                                 seeded_resamples(design.rows(), seed));
}

VarianceBreakdown variance_estimate(const CateFit& fit, Index resamples, std::uint64_t seed) {
  VarianceBreakdown out;
  out.posterior_term = posterior_variance_term(fit.draws);
  auto boot = bootstrap_variance_term(fit.z_bar, fit.design, fit.query_design, resamples, seed);
  out.bootstrap_term = std::move(boot.variance);
  out.total = out.bootstrap_term + out.posterior_term;
  out.resamples = resamples;
  out.draws = fit.draws.rows();
  out.redraws = boot.redraws;
  out.ridged = boot.ridged;
  return out;
}

VarianceBreakdown combine_crossfit(const VarianceBreakdown& first,
                                   const VarianceBreakdown& second) {
  if (first.total.size() != second.total.size()) {
    throw SchemaError("fold variances cover different query sets");
  }
  VarianceBreakdown out;
  out.bootstrap_term = (first.bootstrap_term + second.bootstrap_term) / 4.0;
  out.posterior_term = (first.posterior_term + second.posterior_term) / 4.0;
  out.total = out.bootstrap_term + out.posterior_term;
  out.resamples = first.resamples;
  out.draws = first.draws;
  out.redraws = first.redraws + second.redraws;
  out.ridged = first.ridged + second.ridged;
  return out;
}

double normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("confidence level must lie in (0, 1), got " + std::to_string(level));
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

IntervalEstimate confidence_interval(double point, double total_variance, double level) {
  if (!(total_variance >= 0.0)) throw DomainError("variance must be non-negative");
  const double se = std::sqrt(total_variance);
  const double half = normal_quantile(level) * se;
  return {point, se, level, point - half, point + half};
}

PointwiseIntervals confidence_intervals(const Vector& point, const Vector& total_variance,
                                        double level) {
  if (point.size() != total_variance.size()) {
    throw SchemaError("point estimates and variances differ in length");
  }
  if ((total_variance.array() < 0.0).any() || !total_variance.allFinite()) {
    throw DomainError("variance must be finite and non-negative");
  }
  const double z = normal_quantile(level);
  PointwiseIntervals out;
  out.level = level;
  out.point = point;
  out.se = total_variance.cwiseSqrt();
  out.lower = point - z * out.se;
  out.upper = point + z * out.se;
  return out;
}

Vector sandwich_variance(const Matrix& design, const Matrix& query_design, const Vector& z) {
  const LeastSquares ols(design);
  const Vector residual = z - design * ols.coefficients(z);
  const Vector r2 = residual.array().square();
  Vector out(query_design.rows());
  for (Index j = 0; j < query_design.rows(); ++j) {
    const Vector g = ols.influence(query_design.row(j));
    out[j] = r2.dot(g.cwiseAbs2());
  }
  return out;
}

BaselineFit dml_baseline(const Dataset& data, const PosteriorDraws& draws, const BasisSpec& spec,
                         const Matrix& query, double level) {
  if (draws.units() != data.n()) {
    throw SchemaError("nuisance draws cover " + std::to_string(draws.units()) +
                      " units, dataset has " + std::to_string(data.n()));
  }
  if (query.cols() != data.q()) {
    throw SchemaError("query points have the wrong number of modifier columns");
  }
  const RowVector p1 = draws.p1.colwise().mean();
  const RowVector m1 = draws.m1.colwise().mean();
  const RowVector m0 = draws.m0.colwise().mean();
  BaselineFit out;
  out.pseudo.resize(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    out.pseudo[i] = pseudo_outcome(data.y()[i], data.t()[i], p1[i], m1[i], m0[i]);
  }
  const auto basis = DesignBasis::fit(data.v(), spec);
  const Matrix design = basis.transform(data.v());
  const Matrix query_design = basis.transform(query);
  out.extrapolated = basis.count_extrapolated(query);
  const Vector point = delta(design, query_design, out.pseudo);
  out.intervals = confidence_intervals(point, sandwich_variance(design, query_design, out.pseudo),
                                       level);
  return out;
}

}  // namespace drcate
