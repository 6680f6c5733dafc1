// Continuous spike-and-slab (George-McCulloch) samplers. Each selectable
// coefficient is updated jointly with its mixture indicator: the indicator is
// drawn with the coefficient integrated out, then the coefficient from its
// Gaussian full conditional. This avoids the trap where a coefficient sitting
// in a narrow spike can never move into the slab.

#include <algorithm>
#include <cmath>
#include <vector>

#include "drcate/errors.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/rng.hpp"

namespace drcate {
namespace {

struct Sweeper {
  const Matrix& x;
  Vector col_sq;
  std::vector<char> always_slab;
  double spike_var;
  double slab_var;

  Sweeper(const Matrix& design, Index fixed_columns, const SpikeSlabPrior& prior)
      : x(design),
        col_sq(design.colwise().squaredNorm().transpose()),
        always_slab(static_cast<std::size_t>(design.cols()), 0),
        spike_var(prior.spike_sd * prior.spike_sd),
        slab_var(prior.slab_sd * prior.slab_sd) {
    for (Index j = 0; j < fixed_columns && j < design.cols(); ++j) always_slab[static_cast<std::size_t>(j)] = 1;
  }

  Index selectable() const {
    Index count = 0;
    for (char a : always_slab) count += a ? 0 : 1;
    return count;
  }

  // log marginal of the partial residual under beta_j ~ N(0, v), up to a
  // constant shared by both mixture components.
  static double log_marginal(double v, double a, double b) {
    const double s = 1.0 + v * a;
    return -0.5 * std::log(s) + 0.5 * b * b * v / s;
  }

  // One pass over the coefficients; `residual` tracks target - x * beta.
  void sweep(Vector& beta, Vector& residual, std::vector<char>& gamma, double sigma2,
             double theta, Rng& rng) const {
    const double log_prior_odds = std::log(theta) - std::log1p(-theta);
    for (Index j = 0; j < x.cols(); ++j) {
      const auto col = x.col(j);
      const double old = beta[j];
      const double a = col_sq[j] / sigma2;
      const double b = (col.dot(residual) + col_sq[j] * old) / sigma2;
      double v = slab_var;
      if (!always_slab[static_cast<std::size_t>(j)]) {
        const double log_odds =
            log_prior_odds + log_marginal(slab_var, a, b) - log_marginal(spike_var, a, b);
        const bool in_slab = rng.uniform() * (1.0 + std::exp(-log_odds)) < 1.0;
        gamma[static_cast<std::size_t>(j)] = in_slab ? 1 : 0;
        v = in_slab ? slab_var : spike_var;
      }
      const double prec = a + 1.0 / v;
      const double fresh = b / prec + rng.normal() / std::sqrt(prec);
      beta[j] = fresh;
      if (fresh != old) residual.noalias() -= (fresh - old) * col;
    }
  }

  double draw_theta(const std::vector<char>& gamma, const SpikeSlabPrior& prior, Rng& rng) const {
    Index on = 0;
    for (std::size_t j = 0; j < gamma.size(); ++j) on += (!always_slab[j] && gamma[j]) ? 1 : 0;
    const Index sel = selectable();
    const double b = prior.inclusion_b.value_or(static_cast<double>(std::max<Index>(sel, 1)));
    double theta = rng.beta(prior.inclusion_a + static_cast<double>(on),
                            b + static_cast<double>(sel - on));
    // keep the log-odds finite
    return std::clamp(theta, 1e-300, 1.0 - 1e-16);
  }
};

void check_rank_when_identified(const Matrix& design, const char* what) {
  if (design.cols() <= design.rows()) detail::require_full_rank(design, what);
}

}  // namespace

OutcomePosterior fit_spike_slab_linear(const Dataset& data, const SpikeSlabPrior& prior,
                                       const McmcOptions& mcmc, std::uint64_t seed, Terms terms) {
  prior.validate();
  mcmc.validate();
  const Matrix x = outcome_design(data, terms);
  check_rank_when_identified(x, "outcome");
  const Index n = x.rows();
  const Index k = x.cols();

  double y_scale = 1.0;
  if (prior.autoscale_outcome) {
    y_scale = detail::population_sd(data.y());
    if (!(y_scale > 0.0)) y_scale = 1.0;
  }
  const Vector y = data.y() / y_scale;

  const Sweeper sweeper(x, terms == Terms::full ? 2 : 1, prior);
  Rng rng(seed);
  Vector beta = Vector::Zero(k);
  Vector residual = y;
  std::vector<char> gamma(static_cast<std::size_t>(k), 0);
  for (Index j = 0; j < k; ++j) gamma[static_cast<std::size_t>(j)] = sweeper.always_slab[static_cast<std::size_t>(j)];
  const double b0 = prior.inclusion_b.value_or(static_cast<double>(std::max<Index>(sweeper.selectable(), 1)));
  double theta = prior.inclusion_a / (prior.inclusion_a + b0);
  double sigma2 = std::max(residual.squaredNorm() / static_cast<double>(n), 1e-8);

  OutcomePosterior post;
  post.terms = terms;
  post.coefficients.resize(mcmc.draws, k);
  post.sigma2.resize(mcmc.draws);
  post.inclusion = Vector::Zero(k);

  const double shape = prior.shape + 0.5 * static_cast<double>(n);
  for (Index it = 0; it < mcmc.burnin + mcmc.draws; ++it) {
    if (it % 64 == 63) residual = y - x * beta;  // flush accumulated rounding
    sweeper.sweep(beta, residual, gamma, sigma2, theta, rng);
    sigma2 = rng.inverse_gamma(shape, prior.rate + 0.5 * residual.squaredNorm());
    theta = sweeper.draw_theta(gamma, prior, rng);
    if (it >= mcmc.burnin) {
      const Index b = it - mcmc.burnin;
      post.coefficients.row(b) = (beta * y_scale).transpose();
      post.sigma2[b] = sigma2 * y_scale * y_scale;
      for (Index j = 0; j < k; ++j) post.inclusion[j] += gamma[static_cast<std::size_t>(j)];
    }
  }
  post.inclusion /= static_cast<double>(mcmc.draws);
  return post;
}

PropensityPosterior fit_spike_slab_probit(const Dataset& data, const SpikeSlabPrior& prior,
                                          const McmcOptions& mcmc, std::uint64_t seed,
                                          Terms terms) {
  prior.validate();
  mcmc.validate();
  const Matrix x = propensity_design(data, terms);
  check_rank_when_identified(x, "propensity");
  const Index n = x.rows();
  const Index k = x.cols();

  const Sweeper sweeper(x, 1, prior);
  Rng rng(seed);
  Vector beta = Vector::Zero(k);
  Vector latent = Vector::Zero(n);
  Vector residual = Vector::Zero(n);
  std::vector<char> gamma(static_cast<std::size_t>(k), 0);
  gamma[0] = 1;
  const double b0 = prior.inclusion_b.value_or(static_cast<double>(std::max<Index>(sweeper.selectable(), 1)));
  double theta = prior.inclusion_a / (prior.inclusion_a + b0);

  PropensityPosterior post;
  post.terms = terms;
  post.coefficients.resize(mcmc.draws, k);
  post.inclusion = Vector::Zero(k);

  const Vector& t = data.t();
  for (Index it = 0; it < mcmc.burnin + mcmc.draws; ++it) {
    if (it % 64 == 63) residual = latent - x * beta;
    // eta = latent - residual
    for (Index i = 0; i < n; ++i) {
      const double eta = latent[i] - residual[i];
      latent[i] = rng.truncated_normal_unit(eta, t[i] == 1.0);
      residual[i] = latent[i] - eta;
    }
    sweeper.sweep(beta, residual, gamma, 1.0, theta, rng);
    theta = sweeper.draw_theta(gamma, prior, rng);
    if (it >= mcmc.burnin) {
      const Index b = it - mcmc.burnin;
      post.coefficients.row(b) = beta.transpose();
      if (beta.cwiseAbs().maxCoeff() > 50.0) ++post.separation_warnings;
      for (Index j = 0; j < k; ++j) post.inclusion[j] += gamma[static_cast<std::size_t>(j)];
    }
  }
  post.inclusion /= static_cast<double>(mcmc.draws);
  return post;
}

}  // namespace drcate
