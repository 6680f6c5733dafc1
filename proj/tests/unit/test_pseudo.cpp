#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "drcate/errors.hpp"
#include "drcate/pseudo.hpp"
#include "drcate/simlab.hpp"
#include "drcate/variance.hpp"
#include "helpers.hpp"

using namespace drcate;

TEST_CASE("pseudo-outcome hand cases") {
  CHECK(pseudo_outcome(2.0, 1.0, 0.5, 0.0, 0.0) == 4.0);
  for (double p : {0.1, 0.5, 0.93}) CHECK(pseudo_outcome(1.5, 1.0, p, 1.5, 0.5) == 1.0);
  CHECK(pseudo_outcome(0.0, 0.0, 0.75, 1.0, -1.0) == -2.0);
}

TEST_CASE("non-finite inputs and invalid propensities are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(pseudo_outcome(nan, 1.0, 0.5, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(pseudo_outcome(1.0, 1.0, 0.5, inf, 0.0), DomainError);
  CHECK_THROWS_AS(pseudo_outcome(1.0, 1.0, 0.0, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(pseudo_outcome(1.0, 0.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("pseudo-outcome is affine in y") {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const double t = k % 2;
    const double p = 0.05 + 0.9 * rng.uniform();
    const double m1 = rng.normal(), m0 = rng.normal();
    const double y1 = rng.normal(), y2 = rng.normal(), a = rng.normal();
    const double lhs = pseudo_outcome(a * y1 + (1 - a) * y2, t, p, m1, m0);
    const double rhs = a * pseudo_outcome(y1, t, p, m1, m0) + (1 - a) * pseudo_outcome(y2, t, p, m1, m0);
    CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("posterior mean of pseudo-outcome draws") {
  Matrix z(2, 1);
  z << 1, 3;
  CHECK(posterior_mean_pseudo(z)[0] == 2.0);
  Matrix one(1, 4);
  one << 1, -2, 3.5, 0;
  CHECK(posterior_mean_pseudo(one) == Vector(one.row(0).transpose()));
  Matrix same(5, 3);
  same.rowwise() = RowVector::LinSpaced(3, -1, 2);
  CHECK(posterior_mean_pseudo(same) == Vector(same.row(0).transpose()));
  CHECK(posterior_variance_term(same).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(posterior_mean_pseudo(Matrix(0, 3)), ConfigError);
}

TEST_CASE("pseudo-outcome draws align with the dataset") {
  const auto data = testutil::random_dataset(30, 2, 2, 4);
  Rng rng(5);
  Matrix p1(4, 30), m1(4, 30), m0(4, 30);
  for (Index b = 0; b < 4; ++b)
    for (Index i = 0; i < 30; ++i) {
      p1(b, i) = 0.2 + 0.6 * rng.uniform();
      m1(b, i) = rng.normal();
      m0(b, i) = rng.normal();
    }
  const auto draws = make_posterior_draws(p1, m1, m0, 0.01);
  const auto z = build_pseudo_outcomes(data, draws);
  for (Index b = 0; b < 4; ++b)
    for (Index i = 0; i < 30; ++i)
      CHECK(z.z(b, i) == pseudo_outcome(data.y()[i], data.t()[i], p1(b, i), m1(b, i), m0(b, i)));
  CHECK((z.z_bar - z.z.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const auto other = testutil::random_dataset(31, 2, 2, 4);
  CHECK_THROWS_AS(build_pseudo_outcomes(other, draws), SchemaError);
}

TEST_CASE("decomposition vanishes at the reference and reconstructs the pseudo-outcome") {
  const auto at_ref = decompose(1.3, 1.0, 0.4, 0.7, -0.2, 0.4, 0.7, -0.2);
  CHECK(at_ref.a1 == 0.0);
  CHECK(at_ref.a2 == 0.0);
  CHECK(at_ref.a3 == 0.0);
  CHECK(at_ref.b == pseudo_outcome(1.3, 1.0, 0.4, 0.7, -0.2));

  const auto p_only = decompose(1.3, 0.0, 0.3, 0.7, -0.2, 0.6, 0.7, -0.2);
  CHECK(p_only.a1 == 0.0);
  CHECK(p_only.a3 == 0.0);
  CHECK(p_only.a2 != 0.0);

  Rng rng(2024);
  for (int k = 0; k < 10000; ++k) {
    const double y = 3.0 * rng.normal();
    const double t = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double p = 0.02 + 0.96 * rng.uniform();
    const double pr = 0.02 + 0.96 * rng.uniform();
    const double m1 = rng.normal(), m0 = rng.normal(), r1 = rng.normal(), r0 = rng.normal();
    const auto d = decompose(y, t, p, m1, m0, pr, r1, r0);
    const double z = pseudo_outcome(y, t, p, m1, m0);
    REQUIRE(std::abs(d.sum() - z) <= 1e-10 * std::max(1.0, std::abs(z)));
  }
}

TEST_CASE("vector decomposition matches the scalar form for every unit") {
  const auto data = testutil::random_dataset(25, 2, 1, 6);
  Rng rng(7);
  Matrix p1(3, 25), m1(3, 25), m0(3, 25);
  for (Index b = 0; b < 3; ++b)
    for (Index i = 0; i < 25; ++i) {
      p1(b, i) = 0.1 + 0.8 * rng.uniform();
      m1(b, i) = rng.normal();
      m0(b, i) = rng.normal();
    }
  const auto draws = make_posterior_draws(p1, m1, m0, 0.01);
  const Vector pr = Vector::Constant(25, 0.5), r1 = Vector::Zero(25), r0 = Vector::Ones(25);
  const auto dec = decompose(data, draws, 2, pr, r1, r0);
  const auto z = build_pseudo_outcomes(data, draws);
  for (Index i = 0; i < 25; ++i) {
    const double sum = dec.a1[i] + dec.a2[i] + dec.a3[i] + dec.b[i];
    CHECK(std::abs(sum - z.z(2, i)) <= 1e-10 * std::max(1.0, std::abs(z.z(2, i))));
  }
}

TEST_CASE("pseudo-outcome is unbiased for stratum effects when one nuisance is right") {
  ScenarioConfig cfg;
  cfg.n = 100000;
  const auto draw = gen_scenario(cfg, 0);
  const auto& d = draw.data;
  const auto& truth = draw.truth;
  // Stratum effects for V1 > 0 and V1 <= 0: 0.3 +/- 0.4 E|V1|.
  const double half_normal_mean = std::sqrt(2.0 / 3.141592653589793);
  const double effect[2] = {0.3 - 0.4 * half_normal_mean, 0.3 + 0.4 * half_normal_mean};

  auto check = [&](bool correct_outcome) {
    double sum[2] = {0, 0}, sq[2] = {0, 0};
    double count[2] = {0, 0};
    for (Index i = 0; i < d.n(); ++i) {
      const double m0 = truth.m0_units[i];
      const double m1 = m0 + truth.tau_units[i];
      const double z = correct_outcome
                           ? pseudo_outcome(d.y()[i], d.t()[i], 0.5, m1, m0)
                           : pseudo_outcome(d.y()[i], d.t()[i], truth.p_units[i], 0.0, 0.0);
      const int s = d.v()(i, 1) > 0.0 ? 1 : 0;
      sum[s] += z;
      sq[s] += z * z;
      count[s] += 1;
    }
    for (int s = 0; s < 2; ++s) {
      const double mean = sum[s] / count[s];
      const double se = std::sqrt((sq[s] / count[s] - mean * mean) / count[s]);
      CHECK(std::abs(mean - effect[s]) < 3.0 * se);
    }
  };
  check(true);
  check(false);
}
