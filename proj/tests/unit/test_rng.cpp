#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "drcate/rng.hpp"

using namespace drcate;

TEST_CASE("derived seeds depend on every path element") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(7, {a, b}));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
  CHECK(derive_seed(7, {1}) == derive_seed(7, {1}));
  CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
}

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("truncated normal draws respect the side and match the analytic mean") {
  // Mean of N(mu, 1) restricted to (0, inf) is mu + phi(mu) / Phi(mu).
  const boost::math::normal_distribution<double> nd;
  for (double mu : {-3.0, -0.5, 0.0, 1.2}) {
    Rng rng(static_cast<std::uint64_t>(100 + 10 * mu));
    const int draws = 40000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double z = rng.truncated_normal_unit(mu, true);
      REQUIRE(z > 0.0);
      sum += z;
      sq += z * z;
    }
    const double mean = sum / draws;
    const double sd = std::sqrt(sq / draws - mean * mean);
    const double expected = mu + boost::math::pdf(nd, mu) / boost::math::cdf(nd, mu);
    CHECK(std::abs(mean - expected) < 4.0 * sd / std::sqrt(double(draws)));

    Rng neg(static_cast<std::uint64_t>(200 + 10 * mu));
    for (int i = 0; i < 1000; ++i) REQUIRE(neg.truncated_normal_unit(-mu, false) < 0.0);
  }
}

TEST_CASE("inverse gamma and beta draws match their means") {
  Rng rng(5);
  const int draws = 100000;
  double ig = 0.0, be = 0.0;
  for (int i = 0; i < draws; ++i) {
    ig += rng.inverse_gamma(5.0, 2.0);
    be += rng.beta(2.0, 6.0);
  }
  CHECK(ig / draws == doctest::Approx(2.0 / 4.0).epsilon(0.02));
  CHECK(be / draws == doctest::Approx(0.25).epsilon(0.02));
}
