#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "drcate/errors.hpp"
#include "drcate/nuisance.hpp"
#include "helpers.hpp"

using namespace drcate;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Sparse {
  Dataset data;
  std::vector<Index> signal;  // confounder indices
};

// n = 200, p = 400; y depends on five confounders, t on four.
Sparse sparse_data(std::uint64_t seed, bool null_outcome, bool null_treatment) {
  const Index n = 200, p = 400;
  Rng rng(seed);
  Matrix x = testutil::normal_matrix(n, p, rng);
  const std::vector<Index> signal{3, 50, 120, 250, 399};
  const double coef[] = {0.8, -0.6, 1.0, -0.9, 0.7};
  Vector y(n), t(n);
  for (Index i = 0; i < n; ++i) {
    double eta = 0.0;
    if (!null_treatment) eta = 0.8 * x(i, 3) - 0.8 * x(i, 50) + 0.8 * x(i, 120) - 0.8 * x(i, 250);
    t[i] = rng.normal() < eta ? 1.0 : 0.0;
    double mu = 0.0;
    if (!null_outcome) {
      for (std::size_t s = 0; s < signal.size(); ++s) mu += coef[s] * x(i, signal[s]);
    }
    y[i] = mu + rng.normal();
  }
  return {Dataset(y, t, x, Matrix(n, 0)), signal};
}

}  // namespace

TEST_CASE("spike-and-slab outcome model finds the true support") {
  const auto s = sparse_data(1, false, true);
  const auto post = fit_spike_slab_linear(s.data, {}, {500, 500}, 2);
  // Outcome columns are [1, T, X]; confounder j sits at column 2 + j.
  std::vector<double> signal_incl;
  for (Index j : s.signal) signal_incl.push_back(post.inclusion[2 + j]);
  CHECK(median(signal_incl) > 0.5);
  CHECK(post.inclusion[2 + 200] < 0.2);
  CHECK(post.inclusion[0] == 1.0);
  CHECK(post.inclusion[1] == 1.0);
}

TEST_CASE("spike-and-slab outcome model excludes pure noise") {
  const auto s = sparse_data(3, true, true);
  const auto post = fit_spike_slab_linear(s.data, {}, {500, 500}, 4);
  CHECK(post.inclusion.tail(400).mean() < 0.1);
}

TEST_CASE("spike-and-slab probit ranks true propensity covariates above the null") {
  const auto s = sparse_data(5, true, false);
  const auto post = fit_spike_slab_probit(s.data, {}, {500, 500}, 6);
  std::vector<double> all(post.inclusion.data() + 1, post.inclusion.data() + post.inclusion.size());
  const double null_median = median(all);
  for (Index j : {3, 50, 120, 250}) CHECK(post.inclusion[1 + j] > null_median);
}

TEST_CASE("spike-and-slab probit stays near one half for a constant propensity") {
  const auto s = sparse_data(7, true, true);
  const auto post = fit_spike_slab_probit(s.data, {}, {500, 500}, 8);
  const auto p = make_posterior_draws(post.predict(s.data), {Matrix::Zero(500, 200), Matrix::Zero(500, 200)}, 0.01);
  const Vector mean = p.p1.colwise().mean().transpose();
  const auto inside = (mean.array() > 0.4 && mean.array() < 0.6).count();
  CHECK(static_cast<double>(inside) >= 0.95 * 200);
  CHECK((p.p1.array() >= 0.01).all());
  CHECK((p.p1.array() <= 0.99).all());
}

TEST_CASE("spike-and-slab prior validation and reproducibility") {
  SpikeSlabPrior bad;
  bad.spike_sd = 1.0;
  bad.slab_sd = 1.0;
  const auto d = testutil::random_dataset(60, 5, 2, 1);
  CHECK_THROWS_AS(fit_spike_slab_linear(d, bad, {10, 10}, 1), ConfigError);
  CHECK_THROWS_AS(fit_spike_slab_probit(d, bad, {10, 10}, 1), ConfigError);
  const auto a = fit_spike_slab_linear(d, {}, {10, 20}, 9);
  const auto b = fit_spike_slab_linear(d, {}, {10, 20}, 9);
  CHECK(a.coefficients == b.coefficients);
  const auto c = fit_spike_slab_probit(d, {}, {10, 20}, 9);
  const auto e = fit_spike_slab_probit(d, {}, {10, 20}, 9);
  CHECK(c.coefficients == e.coefficients);
}
