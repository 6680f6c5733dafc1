#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drcate/dataset.hpp"
#include "drcate/least_squares.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/pseudo.hpp"
#include "drcate/rng.hpp"
#include "drcate/variance.hpp"

namespace acceptance {

using namespace drcate;

namespace {

constexpr double kMcseBand = 3.0;
constexpr double kOlsRelative = 1e-8;
constexpr double kDecompositionRelative = 1e-10;
constexpr int kDecompositionCases = 10000;
constexpr double kBootstrapRelative = 0.10;
constexpr double kQuantileAbsolute = 1e-5;

Matrix normal_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

double batch_se(const Vector& chain, Index batches = 40) {
  const Index len = chain.size() / batches;
  Vector means(batches);
  for (Index b = 0; b < batches; ++b) means[b] = chain.segment(b * len, len).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

OracleCheck conjugate_posterior() {
  Rng rng(21);
  const Index n = 200;
  Matrix x = normal_matrix(n, 3, rng);
  Vector t(n), y(n);
  for (Index i = 0; i < n; ++i) {
    t[i] = i % 2 == 0 ? 1.0 : 0.0;
    y[i] = x(i, 0) + 0.5 * t[i] + rng.normal();
  }
  const Dataset data(y, t, x, x.leftCols(2));
  GlmPrior prior;
  prior.autoscale_outcome = false;
  const McmcOptions mcmc{200, 8000};
  const auto post = fit_linear_outcome(data, prior, mcmc, 99);

  // beta | sigma^2 ~ N(0, sigma^2 L0^{-1}), sigma^2 ~ IG(shape, rate).
  const Matrix d = outcome_design(data, Terms::full);
  const Index k = d.cols();
  Vector l0 = Vector::Constant(k, 1.0 / (prior.coef_scale * prior.coef_scale));
  l0[0] = 1.0 / (prior.intercept_scale * prior.intercept_scale);
  Matrix ln = d.transpose() * d;
  ln.diagonal() += l0;
  const Matrix ln_inv = ln.inverse();
  const Vector mu = ln_inv * (d.transpose() * y);
  const double an = prior.shape + 0.5 * static_cast<double>(n);
  const double bn = prior.rate + 0.5 * (y.squaredNorm() - mu.dot(ln * mu));
  const Matrix cov = bn / (an - 1.0) * ln_inv;

  double worst = 0.0;
  for (Index j = 0; j < k; ++j) {
    const Vector chain = post.coefficients.col(j);
    worst = std::max(worst, std::abs(chain.mean() - mu[j]) / batch_se(chain));
    const Vector sq = (chain.array() - mu[j]).square();
    worst = std::max(worst, std::abs(sq.mean() - cov(j, j)) / batch_se(sq));
  }
  worst = std::max(worst, std::abs(post.sigma2.mean() - bn / (an - 1.0)) / batch_se(post.sigma2));
  return {"conjugate Gibbs vs closed form", worst < kMcseBand, "max |error| / MCSE = " + fmt(worst)};
}

OracleCheck least_squares_precision() {
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix v = normal_matrix(50, 3, rng);
    v.col(0).array() += 2.0;
    const Vector z = normal_matrix(50, 1, rng).col(0);
    // Normal equations in long double, solved by Cramer's rule.
    long double a[3][3] = {}, b[3] = {};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c)
        for (Index i = 0; i < 50; ++i) a[r][c] += (long double)v(i, r) * (long double)v(i, c);
      for (Index i = 0; i < 50; ++i) b[r] += (long double)v(i, r) * (long double)z[i];
    }
    auto det = [](long double m[3][3]) {
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const long double full = det(a);
    const Vector beta = LeastSquares(v).coefficients(z);
    for (int c = 0; c < 3; ++c) {
      long double m[3][3];
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) m[r][k] = k == c ? b[r] : a[r][k];
      const double oracle = static_cast<double>(det(m) / full);
      worst = std::max(worst, std::abs(beta[c] - oracle) / std::abs(oracle));
    }
  }
  return {"OLS vs extended-precision normal equations", worst < kOlsRelative,
          "max relative error " + fmt(worst)};
}

OracleCheck decomposition_identity() {
  Rng rng(2024);
  double worst = 0.0;
  for (int k = 0; k < kDecompositionCases; ++k) {
    const double y = 3.0 * rng.normal();
    const double t = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double p = 0.02 + 0.96 * rng.uniform();
    const double pr = 0.02 + 0.96 * rng.uniform();
    const double m1 = rng.normal(), m0 = rng.normal(), r1 = rng.normal(), r0 = rng.normal();
    const double z = pseudo_outcome(y, t, p, m1, m0);
    const double sum = decompose(y, t, p, m1, m0, pr, r1, r0).sum();
    worst = std::max(worst, std::abs(sum - z) / std::max(1.0, std::abs(z)));
  }
  return {"decomposition identity fuzz", worst <= kDecompositionRelative,
          std::to_string(kDecompositionCases) + " cases, max relative error " + fmt(worst)};
}

OracleCheck bootstrap_mean() {
  const Index n = 500;
  Rng rng(4);
  const Vector z = 2.0 * normal_matrix(n, 1, rng).col(0);
  const double mean = z.mean();
  const double sigma2 = (z.array() - mean).square().sum() / double(n - 1);
  const double oracle = sigma2 * double(n - 1) / double(n * n);
  const auto got = bootstrap_variance_term(z, Matrix::Ones(n, 1), Matrix::Ones(1, 1), 2000, 5);
  const double rel = std::abs(got.variance[0] / oracle - 1.0);
  return {"bootstrap mean variance vs analytic", rel < kBootstrapRelative,
          "relative error " + fmt(rel)};
}

OracleCheck interval_quantiles() {
  const auto ci = confidence_interval(0.0, 1.0, 0.95);
  const double e95 = std::max(std::abs(ci.upper - 1.959964), std::abs(ci.lower + 1.959964));
  const auto half = confidence_interval(0.0, 1.0, 0.5);
  const double e50 = std::abs(half.upper - 0.674490);
  const double worst = std::max(e95, e50);
  return {"normal interval quantiles", worst < kQuantileAbsolute, "max abs error " + fmt(worst)};
}

OracleCheck pseudo_hand_cases() {
  const bool ok = pseudo_outcome(2.0, 1.0, 0.5, 0.0, 0.0) == 4.0 &&
                  pseudo_outcome(1.5, 1.0, 0.3, 1.5, 0.5) == 1.0 &&
                  pseudo_outcome(0.0, 0.0, 0.75, 1.0, -1.0) == -2.0;
  return {"pseudo-outcome hand cases", ok, ok ? "exact" : "mismatch"};
}

}  // namespace

std::vector<OracleCheck> run_oracles() {
  return {conjugate_posterior(), least_squares_precision(), decomposition_identity(),
          bootstrap_mean(),      interval_quantiles(),      pseudo_hand_cases()};
}

}  // namespace acceptance
