#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "drcate/dataset.hpp"
#include "drcate/estimator.hpp"
#include "drcate/types.hpp"

namespace drcate {

enum class Scenario { linear, nonlinear, highdim, nonlinear_tau };
enum class QueryMode { random, observed };

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario scenario) noexcept;
QueryMode parse_query_mode(std::string_view name);
std::string_view query_mode_name(QueryMode mode) noexcept;

// Effect modifiers are the first kModifierCount confounders.
inline constexpr Index kModifierCount = 10;
inline constexpr Index kDefaultQueryCount = 100;

struct ScenarioConfig {
  Scenario scenario = Scenario::linear;
  Index n = 200;
  // Confounder count; 0 picks the scenario default (10, or 2n for highdim).
  Index p = 0;
  Index replicates = 200;
  QueryMode query_mode = QueryMode::random;
  Index query_count = kDefaultQueryCount;
  // Draw random query points once from the master seed instead of per replicate.
  bool fixed_query = false;
  std::vector<std::string> methods{"DR-Linear"};
  std::uint64_t seed = 1;
  EstimatorOptions options;
  unsigned threads = 0;  // 0 = hardware concurrency

  Index dimension() const;
  void validate() const;
};

// True nuisance and effect functions. `x` holds one unit's confounders,
// `v` its kModifierCount modifiers (no intercept).
double true_propensity(Scenario scenario, const double* x);
double true_control_mean(Scenario scenario, const double* x);
double true_effect(Scenario scenario, const double* v);

struct TruthRecord {
  Vector tau_query;  // at each query point
  Vector tau_units;  // at each unit's modifiers
  Vector p_units;
  Vector m0_units;
};

// Recomputes the truth from covariates alone. `query` carries the intercept column.
TruthRecord compute_truth(Scenario scenario, const Matrix& x, const Matrix& query);

struct ScenarioDraw {
  Dataset data;
  Matrix query;  // modifier rows with intercept
  TruthRecord truth;
};

ScenarioDraw gen_scenario(const ScenarioConfig& config, Index replicate);

// Master seed of one replicate; the pipeline runs with this seed.
std::uint64_t replicate_seed(const ScenarioConfig& config, Index replicate);

struct SimRecord {
  std::string method;
  Index n = 0;
  Index replicate = 0;
  Index location = 0;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double truth = 0.0;
};

struct ReplicateDiagnostics {
  Index clip_count = 0;
  Index separation_warnings = 0;
  Index redraws = 0;
  Index ridged = 0;
};

struct ReplicateOutcome {
  Index replicate = 0;
  std::vector<SimRecord> records;
  std::vector<std::string> failures;  // "method: message"
  ReplicateDiagnostics diagnostics;

  bool failed() const noexcept { return !failures.empty(); }
};

ReplicateOutcome run_replicate(const ScenarioConfig& config, Index replicate,
                               const std::vector<MethodSpec>& methods);

struct MetricRow {
  std::string method;
  Index n = 0;
  Index replicates = 0;
  Index locations = 0;
  double rmse = 0.0;
  double scaled_rmse = 0.0;
  double se_ratio = 0.0;
  double coverage = 0.0;
  double coverage_mcse = 0.0;
  double ci_width = 0.0;
  double estimated_variability = 0.0;
  double true_variability = 0.0;
  double mean_variance = 0.0;  // average of se^2
  double mc_variance = 0.0;    // Monte Carlo variance of estimate - truth
  double mean_abs_bias = 0.0;
};

// Per-location metrics averaged over locations, one row per (method, n).
// Locations are matched by id across replicates; the Monte Carlo spread is
// taken of estimate - truth so it stays meaningful when query points move.
std::vector<MetricRow> aggregate_metrics(const std::vector<SimRecord>& records);

struct SimReport {
  std::string scenario;
  std::vector<MetricRow> rows;
  Index replicates = 0;
  Index failed_replicates = 0;
  std::vector<std::string> failures;
  ReplicateDiagnostics diagnostics;

  // More than 10% of replicates failed.
  bool failed() const noexcept { return failed_replicates * 10 > replicates; }
};

// Runs all replicates (in parallel, deterministic output) and aggregates them.
SimReport run_experiment(const ScenarioConfig& config, std::vector<SimRecord>* raw = nullptr);

void write_records_csv(std::ostream& out, std::string_view scenario,
                       const std::vector<SimRecord>& records);
void write_report_csv(std::ostream& out, const SimReport& report);

}  // namespace drcate
