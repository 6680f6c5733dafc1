#include "drcate/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

#include "drcate/csv.hpp"
#include "drcate/errors.hpp"
#include "drcate/rng.hpp"

namespace drcate {

Scenario parse_scenario(std::string_view name) {
  if (name == "linear") return Scenario::linear;
  if (name == "nonlinear") return Scenario::nonlinear;
  if (name == "highdim") return Scenario::highdim;
  if (name == "nonlinear_tau") return Scenario::nonlinear_tau;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string_view scenario_name(Scenario scenario) noexcept {
  switch (scenario) {
    case Scenario::linear: return "linear";
    case Scenario::nonlinear: return "nonlinear";
    case Scenario::highdim: return "highdim";
    case Scenario::nonlinear_tau: return "nonlinear_tau";
  }
  return "linear";
}

QueryMode parse_query_mode(std::string_view name) {
  if (name == "random") return QueryMode::random;
  if (name == "observed") return QueryMode::observed;
  throw ConfigError("unknown query mode '" + std::string(name) + "'");
}

std::string_view query_mode_name(QueryMode mode) noexcept {
  return mode == QueryMode::random ? "random" : "observed";
}

Index ScenarioConfig::dimension() const {
  if (p > 0) return p;
  return scenario == Scenario::highdim ? 2 * n : kModifierCount;
}

void ScenarioConfig::validate() const {
  if (n < 2 * (kModifierCount + 1)) {
    throw ConfigError("n must be at least " + std::to_string(2 * (kModifierCount + 1)));
  }
  if (p != 0 && p < kModifierCount) {
    throw ConfigError("p must be at least " + std::to_string(kModifierCount));
  }
  if (scenario == Scenario::highdim && p != 0 && p != 2 * n) {
    throw ConfigError("the highdim scenario fixes p = 2n");
  }
  if (replicates < 2) throw ConfigError("replicates must be at least 2");
  if (query_mode == QueryMode::random && query_count < 2) {
    throw ConfigError("query count must be at least 2");
  }
  parse_methods(methods);
  options.validate();
}

double true_propensity(Scenario scenario, const double* x) {
  switch (scenario) {
    case Scenario::nonlinear:
      return normal_cdf((x[0] > 0.0 ? 1.0 : 0.0) - std::cos(x[1]) + 0.3 * std::abs(x[2]) -
                        std::sin(x[3]));
    default:
      return normal_cdf(0.3 * x[0] - 0.3 * x[1] + 0.3 * x[2] - 0.3 * x[3]);
  }
}

double true_control_mean(Scenario scenario, const double* x) {
  switch (scenario) {
    case Scenario::nonlinear:
      return std::cos(x[0]) + (x[1] > 1.0 ? 1.0 : 0.0) - 0.05 * x[2] * x[2] * x[2] +
             0.1 * std::exp(x[3]) + 1.0 / (x[5] * x[5] + 1.0);
    default:
      return 0.9 * x[0] - 0.6 * x[2] + 0.6 * x[3] + 0.7 * x[5];
  }
}

double true_effect(Scenario scenario, const double* v) {
  if (scenario == Scenario::nonlinear_tau) {
    return 0.3 + 0.4 * std::cos(v[0]) - 0.2 * v[1] * v[1] + 0.7 * std::abs(v[7]);
  }
  return 0.3 + 0.4 * v[0] - 0.2 * v[1] + 0.7 * v[7];
}

TruthRecord compute_truth(Scenario scenario, const Matrix& x, const Matrix& query) {
  TruthRecord truth;
  const Index n = x.rows();
  truth.tau_units.resize(n);
  truth.p_units.resize(n);
  truth.m0_units.resize(n);
  // Row-major copy so each unit's covariates are contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
  for (Index i = 0; i < n; ++i) {
    const double* xi = rows.row(i).data();
    truth.p_units[i] = true_propensity(scenario, xi);
    truth.m0_units[i] = true_control_mean(scenario, xi);
    truth.tau_units[i] = true_effect(scenario, xi);
  }
  truth.tau_query.resize(query.rows());
  for (Index j = 0; j < query.rows(); ++j) {
    double v[kModifierCount];
    for (Index k = 0; k < kModifierCount; ++k) v[k] = query(j, k + 1);
    truth.tau_query[j] = true_effect(scenario, v);
  }
  return truth;
}

std::uint64_t replicate_seed(const ScenarioConfig& config, Index replicate) {
  return derive_seed(config.seed, {label(Stream::replicate), static_cast<std::uint64_t>(replicate)});
}

namespace {

Matrix random_query(Index count, std::uint64_t seed) {
  Rng rng(seed);
  Matrix q(count, kModifierCount + 1);
  q.col(0).setOnes();
  for (Index j = 0; j < count; ++j) {
    for (Index k = 1; k <= kModifierCount; ++k) q(j, k) = rng.normal();
  }
  return q;
}

}  // namespace

ScenarioDraw gen_scenario(const ScenarioConfig& config, Index replicate) {
  const Index n = config.n;
  const Index p = config.dimension();
  const auto seed = replicate_seed(config, replicate);
  Rng rng(derive_seed(seed, {label(Stream::data)}));
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  }
  const Matrix no_query(0, kModifierCount + 1);
  TruthRecord truth = compute_truth(config.scenario, x, no_query);
  Vector t(n), y(n);
  for (Index i = 0; i < n; ++i) t[i] = rng.bernoulli(truth.p_units[i]) ? 1.0 : 0.0;
  for (Index i = 0; i < n; ++i) {
    y[i] = truth.tau_units[i] * t[i] + truth.m0_units[i] + rng.normal();
  }
  ColumnNames names;
  for (Index j = 0; j < p; ++j) names.confounders.push_back("x" + std::to_string(j + 1));
  names.modifiers.push_back(kInterceptName);
  for (Index j = 0; j < kModifierCount; ++j) names.modifiers.push_back(names.confounders[j]);
  const Matrix modifiers = x.leftCols(kModifierCount);
  Dataset data(std::move(y), std::move(t), std::move(x), modifiers, std::move(names));

  Matrix query;
  if (config.query_mode == QueryMode::observed) {
    query = data.v();
  } else if (config.fixed_query) {
    query = random_query(config.query_count, derive_seed(config.seed, {label(Stream::query)}));
  } else {
    query = random_query(config.query_count, derive_seed(seed, {label(Stream::query)}));
  }
  truth.tau_query.resize(query.rows());
  for (Index j = 0; j < query.rows(); ++j) {
    double v[kModifierCount];
    for (Index k = 0; k < kModifierCount; ++k) v[k] = query(j, k + 1);
    truth.tau_query[j] = true_effect(config.scenario, v);
  }
  return {std::move(data), std::move(query), std::move(truth)};
}

ReplicateOutcome run_replicate(const ScenarioConfig& config, Index replicate,
                               const std::vector<MethodSpec>& methods) {
  ReplicateOutcome out;
  out.replicate = replicate;
  auto draw = gen_scenario(config, replicate);
  EstimatorOptions options = config.options;
  if (config.scenario == Scenario::highdim) options.baseline_family = NuisanceFamily::spike_slab;
  Pipeline pipeline(std::move(draw.data), options, replicate_seed(config, replicate));
  for (const auto& method : methods) {
    try {
      const auto result = pipeline.run(method, draw.query);
      for (Index j = 0; j < draw.query.rows(); ++j) {
        out.records.push_back({method.name, config.n, replicate, j, result.estimate[j],
                               result.se[j], result.lower[j], result.upper[j],
                               draw.truth.tau_query[j]});
      }
      out.diagnostics.clip_count += result.clip_count;
      out.diagnostics.separation_warnings += result.separation_warnings;
      out.diagnostics.redraws += result.redraws;
      out.diagnostics.ridged += result.ridged;
    } catch (const std::exception& e) {
      out.failures.push_back(method.name + ": " + e.what());
    }
  }
  return out;
}

std::vector<MetricRow> aggregate_metrics(const std::vector<SimRecord>& records) {
  using CellKey = std::pair<Index, std::string>;  // (n, method)
  struct LocationAcc {
    std::vector<double> error;
    double se_sum = 0.0;
    double var_sum = 0.0;
    double width_sum = 0.0;
    Index covered = 0;
  };
  struct ReplicateAcc {
    std::vector<double> estimate;
    std::vector<double> truth;
  };
  struct CellAcc {
    std::map<Index, LocationAcc> locations;
    std::map<Index, ReplicateAcc> replicates;
  };
  std::map<CellKey, CellAcc> cells;
  for (const auto& r : records) {
    auto& cell = cells[{r.n, r.method}];
    auto& loc = cell.locations[r.location];
    loc.error.push_back(r.estimate - r.truth);
    loc.se_sum += r.se;
    loc.var_sum += r.se * r.se;
    loc.width_sum += r.upper - r.lower;
    if (r.lower <= r.truth && r.truth <= r.upper) ++loc.covered;
    auto& rep = cell.replicates[r.replicate];
    rep.estimate.push_back(r.estimate);
    rep.truth.push_back(r.truth);
  }

  auto sample_variance = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
  };

  std::vector<MetricRow> rows;
  for (const auto& [key, cell] : cells) {
    MetricRow row;
    row.n = key.first;
    row.method = key.second;
    row.replicates = static_cast<Index>(cell.replicates.size());
    row.locations = static_cast<Index>(cell.locations.size());
    for (const auto& [id, loc] : cell.locations) {
      const auto count = static_cast<double>(loc.error.size());
      if (loc.error.size() < 2) {
        throw ConfigError("metrics need at least 2 replicates per location");
      }
      double sq = 0.0, bias = 0.0;
      for (double e : loc.error) {
        sq += e * e;
        bias += e;
      }
      const double mc_var = sample_variance(loc.error);
      row.rmse += std::sqrt(sq / count);
      row.mean_abs_bias += std::abs(bias / count);
      row.se_ratio += (loc.se_sum / count) / std::sqrt(mc_var);
      row.coverage += static_cast<double>(loc.covered) / count;
      row.ci_width += loc.width_sum / count;
      row.mean_variance += loc.var_sum / count;
      row.mc_variance += mc_var;
    }
    const auto locations = static_cast<double>(row.locations);
    row.rmse /= locations;
    row.mean_abs_bias /= locations;
    row.se_ratio /= locations;
    row.coverage /= locations;
    row.ci_width /= locations;
    row.mean_variance /= locations;
    row.mc_variance /= locations;
    row.coverage_mcse =
        std::sqrt(row.coverage * (1.0 - row.coverage) / static_cast<double>(row.replicates));
    for (const auto& [id, rep] : cell.replicates) {
      if (rep.estimate.size() < 2) continue;
      row.estimated_variability += sample_variance(rep.estimate);
      row.true_variability += sample_variance(rep.truth);
    }
    row.estimated_variability /= static_cast<double>(row.replicates);
    row.true_variability /= static_cast<double>(row.replicates);
    rows.push_back(std::move(row));
  }
  std::map<Index, double> best;
  for (const auto& row : rows) {
    auto [it, inserted] = best.emplace(row.n, row.rmse);
    if (!inserted) it->second = std::min(it->second, row.rmse);
  }
  for (auto& row : rows) row.scaled_rmse = row.rmse / best[row.n];
  return rows;
}

SimReport run_experiment(const ScenarioConfig& config, std::vector<SimRecord>* raw) {
  config.validate();
  const auto methods = parse_methods(config.methods);
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));
  unsigned workers = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(config.replicates));
  std::atomic<Index> next{0};
  auto work = [&] {
    for (Index r = next++; r < config.replicates; r = next++) {
      auto& slot = outcomes[static_cast<std::size_t>(r)];
      try {
        slot = run_replicate(config, r, methods);
      } catch (const std::exception& e) {
        slot.replicate = r;
        slot.failures.push_back(std::string("replicate: ") + e.what());
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  SimReport report;
  report.scenario = std::string(scenario_name(config.scenario));
  report.replicates = config.replicates;
  std::vector<SimRecord> records;
  for (auto& o : outcomes) {
    if (o.failed()) {
      ++report.failed_replicates;
      for (auto& f : o.failures) {
        report.failures.push_back("replicate " + std::to_string(o.replicate) + ": " + f);
      }
    }
    report.diagnostics.clip_count += o.diagnostics.clip_count;
    report.diagnostics.separation_warnings += o.diagnostics.separation_warnings;
    report.diagnostics.redraws += o.diagnostics.redraws;
    report.diagnostics.ridged += o.diagnostics.ridged;
    records.insert(records.end(), std::make_move_iterator(o.records.begin()),
                   std::make_move_iterator(o.records.end()));
  }
  if (!records.empty()) report.rows = aggregate_metrics(records);
  if (raw) *raw = std::move(records);
  return report;
}

void write_records_csv(std::ostream& out, std::string_view scenario,
                       const std::vector<SimRecord>& records) {
  csv::write_row(out, {"scenario", "n", "replicate", "method", "location", "estimate", "se",
                       "lower", "upper", "truth"});
  const std::string s(scenario);
  for (const auto& r : records) {
    csv::write_row(out, {s, std::to_string(r.n), std::to_string(r.replicate), r.method,
                         std::to_string(r.location), csv::format_double(r.estimate),
                         csv::format_double(r.se), csv::format_double(r.lower),
                         csv::format_double(r.upper), csv::format_double(r.truth)});
  }
}

void write_report_csv(std::ostream& out, const SimReport& report) {
  csv::write_row(out, {"scenario", "method", "n", "metric", "value"});
  for (const auto& row : report.rows) {
    const std::tuple<const char*, double> metrics[] = {
        {"rmse", row.rmse},
        {"scaled_rmse", row.scaled_rmse},
        {"se_ratio", row.se_ratio},
        {"coverage", row.coverage},
        {"coverage_mcse", row.coverage_mcse},
        {"ci_width", row.ci_width},
        {"estimated_variability", row.estimated_variability},
        {"true_variability", row.true_variability},
        {"mean_variance", row.mean_variance},
        {"mc_variance", row.mc_variance},
        {"mean_abs_bias", row.mean_abs_bias},
        {"replicates", static_cast<double>(row.replicates)},
    };
    for (const auto& [name, value] : metrics) {
      csv::write_row(out, {report.scenario, row.method, std::to_string(row.n), name,
                           csv::format_double(value)});
    }
  }
}

}  // namespace drcate
