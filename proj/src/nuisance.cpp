#include "drcate/nuisance.hpp"

#include <cmath>

#include "drcate/csv.hpp"
#include "drcate/errors.hpp"
#include "drcate/rng.hpp"

namespace drcate {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void GlmPrior::validate() const {
  if (!(coef_scale > 0.0) || !(intercept_scale > 0.0) || !(shape > 0.0) || !(rate > 0.0)) {
    throw ConfigError("GLM prior scales and inverse-gamma parameters must be strictly positive");
  }
}

void SpikeSlabPrior::validate() const {
  if (!(spike_sd > 0.0) || !(slab_sd > 0.0)) {
    throw ConfigError("spike and slab standard deviations must be strictly positive");
  }
  if (!(spike_sd < slab_sd)) {
    throw ConfigError("spike SD must be smaller than slab SD (degenerate mixture)");
  }
  if (!(inclusion_a > 0.0) || (inclusion_b && !(*inclusion_b > 0.0))) {
    throw ConfigError("inclusion Beta hyperparameters must be strictly positive");
  }
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw ConfigError("inverse-gamma parameters must be strictly positive");
  }
}

void McmcOptions::validate() const {
  if (draws < 1) throw ConfigError("draw count must be at least 1");
  if (draws > kMaxDraws) {
    throw ConfigError("draw count " + std::to_string(draws) + " exceeds the maximum of " +
                      std::to_string(kMaxDraws));
  }
  if (burnin < 0) throw ConfigError("burn-in must be non-negative");
}

Matrix outcome_design(const Dataset& data, Terms terms, std::optional<double> treatment) {
  const Index n = data.n();
  if (terms == Terms::intercept_only) return Matrix::Ones(n, 1);
  const Index p = data.p();
  const Index inter = data.q() - 1;
  Matrix d(n, 2 + p + inter);
  d.col(0).setOnes();
  if (treatment) {
    d.col(1).setConstant(*treatment);
  } else {
    d.col(1) = data.t();
  }
  d.middleCols(2, p) = data.x();
  for (Index j = 0; j < inter; ++j) {
    d.col(2 + p + j) = d.col(1).cwiseProduct(data.v().col(j + 1));
  }
  return d;
}

Matrix propensity_design(const Dataset& data, Terms terms) {
  const Index n = data.n();
  if (terms == Terms::intercept_only) return Matrix::Ones(n, 1);
  Matrix d(n, 1 + data.p());
  d.col(0).setOnes();
  d.rightCols(data.p()) = data.x();
  return d;
}

OutcomeDraws OutcomePosterior::predict(const Dataset& data) const {
  const Matrix d1 = outcome_design(data, terms, 1.0);
  const Matrix d0 = outcome_design(data, terms, 0.0);
  if (d1.cols() != coefficients.cols()) {
    throw SchemaError("outcome posterior was fitted with a different number of columns");
  }
  return {coefficients * d1.transpose(), coefficients * d0.transpose()};
}

PropensityDraws PropensityPosterior::predict(const Dataset& data) const {
  const Matrix d = propensity_design(data, terms);
  if (d.cols() != coefficients.cols()) {
    throw SchemaError("propensity posterior was fitted with a different number of columns");
  }
  Matrix p1 = (coefficients * d.transpose()).unaryExpr([](double eta) { return normal_cdf(eta); });
  return {std::move(p1), separation_warnings};
}

PosteriorDraws make_posterior_draws(Matrix p1, Matrix m1, Matrix m0, double clip_lo,
                                    Index separation_warnings) {
  if (!(clip_lo > 0.0 && clip_lo < 0.5)) {
    throw ConfigError("propensity clip bound must lie in (0, 0.5)");
  }
  if (p1.rows() != m1.rows() || p1.rows() != m0.rows() || p1.cols() != m1.cols() ||
      p1.cols() != m0.cols()) {
    throw SchemaError("posterior draw matrices have mismatched shapes (" +
                      std::to_string(p1.rows()) + "x" + std::to_string(p1.cols()) + ", " +
                      std::to_string(m1.rows()) + "x" + std::to_string(m1.cols()) + ", " +
                      std::to_string(m0.rows()) + "x" + std::to_string(m0.cols()) + ")");
  }
  if (p1.rows() < 1) throw SchemaError("posterior draws are empty");
  if (!m1.allFinite() || !m0.allFinite()) throw DomainError("outcome draws contain non-finite values");
  if (!p1.allFinite()) throw DomainError("propensity draws contain non-finite values");

  PosteriorDraws out;
  out.clip_lo = clip_lo;
  out.separation_warnings = separation_warnings;
  const double hi = 1.0 - clip_lo;
  for (Index j = 0; j < p1.cols(); ++j) {
    for (Index i = 0; i < p1.rows(); ++i) {
      double& p = p1(i, j);
      if (p < clip_lo) {
        p = clip_lo;
        ++out.clip_count;
      } else if (p > hi) {
        p = hi;
        ++out.clip_count;
      }
    }
  }
  out.p0 = (1.0 - p1.array()).matrix();
  out.p1 = std::move(p1);
  out.m1 = std::move(m1);
  out.m0 = std::move(m0);
  return out;
}

PosteriorDraws make_posterior_draws(PropensityDraws propensity, OutcomeDraws outcome,
                                    double clip_lo) {
  return make_posterior_draws(std::move(propensity.p1), std::move(outcome.m1),
                              std::move(outcome.m0), clip_lo, propensity.separation_warnings);
}

namespace detail {

void require_full_rank(const Matrix& design, const char* what) {
  if (design.rows() < design.cols()) {
    throw DomainError(std::string(what) + " design has more columns than rows");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw DomainError(std::string(what) + " design is rank deficient (rank " +
                      std::to_string(qr.rank()) + " < " + std::to_string(design.cols()) + ")");
  }
}

double population_sd(const Vector& y) {
  const double m = y.mean();
  return std::sqrt((y.array() - m).square().sum() / static_cast<double>(y.size()));
}

}  // namespace detail

OutcomePosterior fit_linear_outcome(const Dataset& data, const GlmPrior& prior,
                                    const McmcOptions& mcmc, std::uint64_t seed, Terms terms) {
  prior.validate();
  mcmc.validate();
  const Matrix x = outcome_design(data, terms);
  detail::require_full_rank(x, "outcome");
  const Index n = x.rows();
  const Index k = x.cols();

  double y_scale = 1.0;
  if (prior.autoscale_outcome) {
    y_scale = detail::population_sd(data.y());
    if (!(y_scale > 0.0)) y_scale = 1.0;
  }
  const Vector y = data.y() / y_scale;

  Vector prior_precision = Vector::Constant(k, 1.0 / (prior.coef_scale * prior.coef_scale));
  prior_precision[0] = 1.0 / (prior.intercept_scale * prior.intercept_scale);

  const Matrix xtx = x.transpose() * x;
  const Vector xty = x.transpose() * y;
  const double yty = y.squaredNorm();
  Matrix precision = xtx;
  precision.diagonal() += prior_precision;
  const Eigen::LLT<Matrix> chol(precision);
  if (chol.info() != Eigen::Success) throw DomainError("outcome posterior precision is not positive definite");
  const Vector mean = chol.solve(xty);
  const auto upper = chol.matrixU();

  Rng rng(seed);
  const double post_shape = prior.shape + 0.5 * static_cast<double>(n + k);
  double sigma2 = 1.0;
  OutcomePosterior post;
  post.terms = terms;
  post.coefficients.resize(mcmc.draws, k);
  post.sigma2.resize(mcmc.draws);

  Vector eps(k);
  for (Index it = 0; it < mcmc.burnin + mcmc.draws; ++it) {
    for (Index j = 0; j < k; ++j) eps[j] = rng.normal();
    // precision = U^T U, so U^{-1} eps has covariance precision^{-1}.
    const Vector beta = mean + std::sqrt(sigma2) * upper.solve(eps);
    const double rss = std::max(0.0, yty - 2.0 * beta.dot(xty) + beta.dot(xtx * beta));
    const double penalty = beta.dot(prior_precision.cwiseProduct(beta));
    sigma2 = rng.inverse_gamma(post_shape, prior.rate + 0.5 * (rss + penalty));
    if (it >= mcmc.burnin) {
      const Index b = it - mcmc.burnin;
      post.coefficients.row(b) = (beta * y_scale).transpose();
      post.sigma2[b] = sigma2 * y_scale * y_scale;
    }
  }
  return post;
}

PropensityPosterior fit_probit_propensity(const Dataset& data, const GlmPrior& prior,
                                          const McmcOptions& mcmc, std::uint64_t seed,
                                          Terms terms) {
  prior.validate();
  mcmc.validate();
  const Matrix x = propensity_design(data, terms);
  detail::require_full_rank(x, "propensity");
  const Index n = x.rows();
  const Index k = x.cols();

  Vector prior_precision = Vector::Constant(k, 1.0 / (prior.coef_scale * prior.coef_scale));
  prior_precision[0] = 1.0 / (prior.intercept_scale * prior.intercept_scale);
  Matrix precision = x.transpose() * x;
  precision.diagonal() += prior_precision;
  const Eigen::LLT<Matrix> chol(precision);
  if (chol.info() != Eigen::Success) throw DomainError("propensity posterior precision is not positive definite");
  const auto upper = chol.matrixU();

  Rng rng(seed);
  PropensityPosterior post;
  post.terms = terms;
  post.coefficients.resize(mcmc.draws, k);

  const Vector& t = data.t();
  Vector beta = Vector::Zero(k);
  Vector eta = Vector::Zero(n);
  Vector latent(n);
  Vector eps(k);
  for (Index it = 0; it < mcmc.burnin + mcmc.draws; ++it) {
    for (Index i = 0; i < n; ++i) latent[i] = rng.truncated_normal_unit(eta[i], t[i] == 1.0);
    for (Index j = 0; j < k; ++j) eps[j] = rng.normal();
    beta = chol.solve(x.transpose() * latent) + upper.solve(eps);
    eta.noalias() = x * beta;
    if (it >= mcmc.burnin) {
      post.coefficients.row(it - mcmc.burnin) = beta.transpose();
      if (beta.cwiseAbs().maxCoeff() > 50.0) ++post.separation_warnings;
    }
  }
  return post;
}

PosteriorDraws import_external_draws(const std::filesystem::path& p1_file,
                                     const std::filesystem::path& m1_file,
                                     const std::filesystem::path& m0_file, double clip_lo) {
  Matrix p1 = csv::read_matrix(p1_file);
  Matrix m1 = csv::read_matrix(m1_file);
  Matrix m0 = csv::read_matrix(m0_file);
  constexpr double tol = 1e-12;
  for (Index j = 0; j < p1.cols(); ++j) {
    for (Index i = 0; i < p1.rows(); ++i) {
      const double p = p1(i, j);
      // Values within tol of the boundary are accepted and clipped later.
      if (p < -tol || p > 1.0 + tol) {
        throw DomainError("propensity draw " + csv::format_double(p) + " at draw " +
                          std::to_string(i + 1) + ", unit " + std::to_string(j + 1) +
                          " lies outside (0, 1)");
      }
    }
  }
  return make_posterior_draws(std::move(p1), std::move(m1), std::move(m0), clip_lo);
}

}  // namespace drcate
