#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <sstream>

#include "drcate/errors.hpp"
#include "drcate/simlab.hpp"
#include "helpers.hpp"

using namespace drcate;

namespace {

SimRecord record(std::string method, Index replicate, Index location, double estimate, double se,
                 double truth) {
  return {std::move(method), 200, replicate, location, estimate, se, estimate - 1.96 * se,
          estimate + 1.96 * se, truth};
}

}  // namespace

TEST_CASE("truth formulas at simple points") {
  double x[10] = {};
  CHECK(true_propensity(Scenario::linear, x) == 0.5);
  CHECK(true_effect(Scenario::linear, x) == doctest::Approx(0.3));
  x[0] = 1.0;
  CHECK(true_effect(Scenario::linear, x) == doctest::Approx(0.7));
  x[0] = 0.0;
  x[1] = 2.0;
  x[7] = -1.0;
  CHECK(true_effect(Scenario::linear, x) == doctest::Approx(0.3 - 0.4 - 0.7));
  CHECK(true_effect(Scenario::nonlinear_tau, x) ==
        doctest::Approx(0.3 + 0.4 * std::cos(0.0) - 0.2 * 4.0 + 0.7));
  double y[10] = {0.5, -1, 2, 0.25, 0, 1.5, 0, 0, 0, 0};
  CHECK(true_control_mean(Scenario::linear, y) ==
        doctest::Approx(0.9 * 0.5 - 0.6 * 2 + 0.6 * 0.25 + 0.7 * 1.5));
  for (auto s : {Scenario::linear, Scenario::nonlinear, Scenario::highdim}) {
    const double p = true_propensity(s, y);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("scenario and query-mode names round trip") {
  for (auto s : {Scenario::linear, Scenario::nonlinear, Scenario::highdim, Scenario::nonlinear_tau})
    CHECK(parse_scenario(scenario_name(s)) == s);
  for (auto m : {QueryMode::random, QueryMode::observed}) CHECK(parse_query_mode(query_mode_name(m)) == m);
  CHECK_THROWS_AS(parse_scenario("quadratic"), ConfigError);
}

TEST_CASE("config validation") {
  ScenarioConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.dimension() == 10);
  cfg.replicates = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.replicates = 2;
  cfg.scenario = Scenario::highdim;
  CHECK(cfg.dimension() == 400);
  cfg.p = 300;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.p = 400;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("treatment rate matches the integrated propensity") {
  ScenarioConfig cfg;
  cfg.n = 100000;
  const auto draw = gen_scenario(cfg, 0);
  const double rate = draw.data.t().mean();
  const double se_sample = std::sqrt(rate * (1.0 - rate) / double(cfg.n));

  Rng rng(777);
  const boost::math::normal_distribution<double> phi;
  const int draws = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    double a = 0.0;
    for (int j = 0; j < 4; ++j) a += (j % 2 == 0 ? 0.3 : -0.3) * rng.normal();
    const double p = boost::math::cdf(phi, a);
    sum += p;
    sq += p * p;
  }
  const double oracle = sum / draws;
  const double se_oracle = std::sqrt((sq / draws - oracle * oracle) / draws);
  CHECK(std::abs(rate - oracle) < 3.0 * std::hypot(se_sample, se_oracle));
}

TEST_CASE("generated data layout and truth purity") {
  ScenarioConfig cfg;
  cfg.n = 150;
  const auto draw = gen_scenario(cfg, 3);
  CHECK(draw.data.n() == 150);
  CHECK(draw.data.p() == 10);
  CHECK(draw.data.q() == 11);
  CHECK(draw.data.v().rightCols(10) == draw.data.x().leftCols(10));
  CHECK(draw.query.rows() == kDefaultQueryCount);
  CHECK(draw.query.col(0).isOnes());
  const auto again = compute_truth(cfg.scenario, draw.data.x(), draw.query);
  CHECK(again.tau_query == draw.truth.tau_query);
  CHECK(again.tau_units == draw.truth.tau_units);
  CHECK(again.p_units == draw.truth.p_units);
  CHECK(again.m0_units == draw.truth.m0_units);

  cfg.scenario = Scenario::highdim;
  cfg.n = 30;
  const auto wide = gen_scenario(cfg, 0);
  CHECK(wide.data.p() == 60);
  CHECK(wide.data.q() == 11);
}

TEST_CASE("query points are fresh per replicate unless fixed") {
  ScenarioConfig cfg;
  cfg.n = 100;
  CHECK(gen_scenario(cfg, 0).query != gen_scenario(cfg, 1).query);
  cfg.fixed_query = true;
  CHECK(gen_scenario(cfg, 0).query == gen_scenario(cfg, 1).query);
  cfg.query_mode = QueryMode::observed;
  const auto obs = gen_scenario(cfg, 0);
  CHECK(obs.query == obs.data.v());
}

TEST_CASE("replicate records have the expected shape and are deterministic") {
  ScenarioConfig cfg;
  cfg.n = 120;
  cfg.options.mcmc.draws = 100;
  cfg.options.mcmc.burnin = 50;
  cfg.options.resamples = 30;
  const auto methods = parse_methods({"DR-Linear", "DML-Baseline"});
  const auto out = run_replicate(cfg, 0, methods);
  CHECK(!out.failed());
  CHECK(out.records.size() == 200);
  const auto again = run_replicate(cfg, 0, methods);
  REQUIRE(again.records.size() == out.records.size());
  for (std::size_t k = 0; k < out.records.size(); ++k) {
    CHECK(again.records[k].estimate == out.records[k].estimate);
    CHECK(again.records[k].se == out.records[k].se);
  }
  cfg.query_mode = QueryMode::observed;
  CHECK(run_replicate(cfg, 0, parse_methods({"DR-Linear"})).records.size() == 120);
}

TEST_CASE("method failures are recorded without aborting the replicate") {
  ScenarioConfig cfg;
  cfg.n = 80;
  cfg.options.mcmc.draws = 50;
  cfg.options.mcmc.burnin = 20;
  cfg.options.resamples = 10;
  const auto out = run_replicate(cfg, 0, parse_methods({"DR-External", "DR-Linear"}));
  CHECK(out.failures.size() == 1);
  CHECK(out.records.size() == 100);
}

TEST_CASE("metric hand computations") {
  SimRecord a{"M", 200, 0, 0, 1.0, 0.5, -0.5, 2.5, 2.0};
  SimRecord b{"M", 200, 1, 0, 3.0, 0.5, 1.5, 4.5, 2.0};
  const auto rows = aggregate_metrics({a, b});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].rmse == doctest::Approx(1.0));
  CHECK(rows[0].coverage == 1.0);
  CHECK(rows[0].scaled_rmse == 1.0);
  CHECK(rows[0].mean_abs_bias == doctest::Approx(0.0));

  // Errors -d and +d have sample SD sqrt(2) d; choose d for SD 0.5.
  const double d = 0.5 / std::sqrt(2.0);
  const auto ratio = aggregate_metrics({record("M", 0, 0, 2.0 - d, 0.6, 2.0), record("M", 1, 0, 2.0 + d, 0.6, 2.0)});
  CHECK(ratio[0].se_ratio == doctest::Approx(1.2));

  const auto two = aggregate_metrics({record("A", 0, 0, 1.0, 1, 0.0), record("A", 1, 0, -1.0, 1, 0.0),
                                      record("B", 0, 0, 2.0, 1, 0.0), record("B", 1, 0, -2.0, 1, 0.0)});
  REQUIRE(two.size() == 2);
  CHECK(two[0].scaled_rmse == 1.0);
  CHECK(two[1].scaled_rmse == doctest::Approx(2.0));
  for (const auto& row : two) {
    CHECK(row.scaled_rmse >= 1.0);
    CHECK(row.coverage >= 0.0);
    CHECK(row.coverage <= 1.0);
  }

  CHECK_THROWS_AS(aggregate_metrics({a}), ConfigError);
}

TEST_CASE("variability metrics use the spread across locations") {
  std::vector<SimRecord> recs;
  for (Index r = 0; r < 2; ++r)
    for (Index j = 0; j < 3; ++j) recs.push_back(record("M", r, j, double(j) * 2.0, 1.0, double(j)));
  const auto rows = aggregate_metrics(recs);
  CHECK(rows[0].estimated_variability == doctest::Approx(4.0));
  CHECK(rows[0].true_variability == doctest::Approx(1.0));
}

TEST_CASE("small experiment runs and reruns identically") {
  ScenarioConfig cfg;
  cfg.n = 100;
  cfg.replicates = 4;
  cfg.methods = {"DR-Linear", "DML-Baseline"};
  cfg.options.mcmc.draws = 100;
  cfg.options.mcmc.burnin = 50;
  cfg.options.resamples = 30;
  cfg.threads = 2;
  std::vector<SimRecord> raw;
  const auto report = run_experiment(cfg, &raw);
  CHECK(report.replicates == 4);
  CHECK(report.failed_replicates == 0);
  CHECK(!report.failed());
  REQUIRE(report.rows.size() == 2);
  for (const auto& row : report.rows) {
    CHECK(row.replicates == 4);
    CHECK(std::isfinite(row.rmse));
    CHECK(std::isfinite(row.scaled_rmse));
    CHECK(std::isfinite(row.se_ratio));
    CHECK(std::isfinite(row.coverage));
  }
  CHECK(raw.size() == 4 * 2 * 100);

  cfg.threads = 1;
  std::vector<SimRecord> raw2;
  const auto report2 = run_experiment(cfg, &raw2);
  std::ostringstream a, b;
  write_report_csv(a, report);
  write_report_csv(b, report2);
  CHECK(a.str() == b.str());
  std::ostringstream ra, rb;
  write_records_csv(ra, "linear", raw);
  write_records_csv(rb, "linear", raw2);
  CHECK(ra.str() == rb.str());
}

TEST_CASE("experiment flags too many failed replicates") {
  ScenarioConfig cfg;
  cfg.n = 60;
  cfg.replicates = 3;
  cfg.methods = {"DR-External"};
  const auto report = run_experiment(cfg);
  CHECK(report.failed_replicates == 3);
  CHECK(report.failed());
}
