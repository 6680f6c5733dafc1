#include "drcate/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "drcate/basis.hpp"
#include "drcate/csv.hpp"
#include "drcate/dataset.hpp"
#include "drcate/errors.hpp"
#include "drcate/estimator.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/simlab.hpp"

namespace drcate::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
  return os.str();
}

std::string fmt(double x) { return csv::format_double(x); }

// Flat key=value files. A file whose first line starts with "# drcate" is a
// previous output: its "# key=value" header lines are read and the rest ignored.
class KeyValueConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    std::vector<CLI::ConfigItem> items;
    std::string line;
    bool header_mode = false;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (first) {
        first = false;
        if (line.rfind("# drcate", 0) == 0) {
          header_mode = true;
          continue;
        }
      }
      std::string body = trim(line);
      if (header_mode) {
        if (body.empty() || body.front() != '#') break;
        body = trim(body.substr(1));
      } else if (body.empty() || body.front() == '#') {
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        if (header_mode) continue;
        throw CLI::ConfigError("config line '" + body + "' is not key=value");
      }
      CLI::ConfigItem item;
      item.name = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (item.name == "command") continue;
      item.inputs = {value};
      items.push_back(std::move(item));
    }
    return items;
  }
};

Terms parse_terms(const std::string& name, const char* key) {
  if (name == "full") return Terms::full;
  if (name == "intercept") return Terms::intercept_only;
  throw ConfigError(std::string(key) + " must be 'full' or 'intercept', got '" + name + "'");
}

BasisSpec basis_spec(const RunConfig& c) {
  BasisSpec spec;
  if (c.basis == "linear") {
    spec.kind = BasisKind::linear;
  } else if (c.basis == "spline") {
    spec.kind = BasisKind::natural_spline;
  } else {
    throw ConfigError("basis must be 'linear' or 'spline', got '" + c.basis + "'");
  }
  spec.df = c.spline_df;
  spec.validate();
  return spec;
}

EstimatorOptions estimator_options(const RunConfig& c) {
  EstimatorOptions o;
  o.mcmc.draws = c.draws;
  o.mcmc.burnin = c.burnin;
  o.resamples = c.resamples;
  o.clip = c.clip;
  o.level = c.level;
  o.basis = basis_spec(c);
  o.outcome_terms = parse_terms(c.outcome_terms, "outcome-terms");
  o.propensity_terms = parse_terms(c.propensity_terms, "propensity-terms");
  o.standardize = c.standardize;
  if (c.draws < 2) throw ConfigError("draws must be at least 2");
  if (c.resamples < 2) throw ConfigError("resamples must be at least 2");
  o.validate();
  return o;
}

// Method names, plus cross-fitted variants of DR methods when requested.
std::vector<std::string> method_names(const RunConfig& c) {
  std::vector<std::string> names = c.methods;
  if (c.crossfit) {
    for (const auto& m : c.methods) {
      const auto spec = parse_method(m);
      if (!spec.baseline && !spec.crossfit && spec.family != NuisanceFamily::external) {
        names.push_back(m + "-CF");
      }
    }
  }
  parse_methods(names);
  return names;
}

void require(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError("missing required setting '" + std::string(key) + "'");
}

void require(const std::vector<std::string>& value, const char* key) {
  if (value.empty()) throw ConfigError("missing required setting '" + std::string(key) + "'");
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

struct Manifest {
  nlohmann::json json;

  Manifest(const RunConfig& c) {
    json["command"] = c.command;
    for (const auto& [k, v] : c.echo()) json["config"][k] = v;
    json["files"] = nlohmann::json::array();
    json["failures"] = nlohmann::json::array();
  }

  void write(const fs::path& dir) const {
    auto f = open_output(dir / "manifest.json");
    f << json.dump(2) << '\n';
  }
};

Dataset load_dataset(const RunConfig& c) {
  require(c.data, "data");
  require(c.outcome, "outcome");
  require(c.treatment, "treatment");
  require(c.confounders, "confounders");
  require(c.modifiers, "modifiers");
  Schema schema;
  schema.outcome = c.outcome;
  schema.treatment = c.treatment;
  schema.confounders = c.confounders;
  schema.modifiers = c.modifiers;
  schema.dichotomize = c.dichotomize;
  return load_csv(c.data, schema);
}

Matrix read_query_file(const std::string& path, const std::vector<std::string>& modifiers) {
  const auto table = csv::read_table(path);
  Matrix q(static_cast<Index>(table.rows.size()), static_cast<Index>(modifiers.size()) + 1);
  q.col(0).setOnes();
  for (std::size_t j = 0; j < modifiers.size(); ++j) {
    std::size_t col;
    try {
      col = table.column_index(modifiers[j]);
    } catch (const SchemaError&) {
      throw SchemaError("'" + path + "': missing column '" + modifiers[j] + "'");
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      q(static_cast<Index>(r), static_cast<Index>(j) + 1) =
          csv::parse_double(table.rows[r][col], r + 1, modifiers[j]);
    }
  }
  return q;
}

std::optional<PosteriorDraws> external_draws(const RunConfig& c,
                                             const std::vector<MethodSpec>& methods) {
  const bool needed = std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) {
    return !m.baseline && m.family == NuisanceFamily::external;
  });
  if (!needed) return std::nullopt;
  require(c.external_p1, "external-p1");
  require(c.external_m1, "external-m1");
  require(c.external_m0, "external-m0");
  return import_external_draws(c.external_p1, c.external_m1, c.external_m0, c.clip);
}

void add_diagnostics(nlohmann::json& j, const MethodResult& r) {
  auto& d = j["diagnostics"][r.method];
  d["clip_count"] = r.clip_count;
  d["separation_warnings"] = r.separation_warnings;
  d["bootstrap_redraws"] = r.redraws;
  d["bootstrap_ridge"] = r.ridged;
  d["extrapolated_queries"] = r.extrapolated;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  ScenarioConfig base;
  base.scenario = parse_scenario(c.scenario);
  if (c.query == "file") throw ConfigError("query 'file' is only available for analyze");
  base.query_mode = parse_query_mode(c.query);
  base.p = c.p;
  base.replicates = c.replicates;
  base.query_count = c.query_count;
  base.fixed_query = c.fixed_query;
  base.methods = method_names(c);
  base.seed = c.seed;
  base.options = estimator_options(c);
  base.threads = c.threads;
  if (c.n.empty()) throw ConfigError("missing required setting 'n'");
  for (Index n : c.n) {
    ScenarioConfig sc = base;
    sc.n = n;
    sc.validate();
  }

  const fs::path dir = c.out;
  fs::create_directories(dir);
  Manifest manifest(c);
  SimReport combined;
  combined.scenario = c.scenario;
  std::vector<SimRecord> all_records;
  bool threshold_exceeded = false;
  for (Index n : c.n) {
    ScenarioConfig sc = base;
    sc.n = n;
    std::vector<SimRecord> records;
    const auto report = run_experiment(sc, &records);
    threshold_exceeded = threshold_exceeded || report.failed();
    combined.replicates += report.replicates;
    combined.failed_replicates += report.failed_replicates;
    for (const auto& f : report.failures) {
      combined.failures.push_back("n=" + std::to_string(n) + " " + f);
    }
    combined.rows.insert(combined.rows.end(), report.rows.begin(), report.rows.end());
    auto& d = manifest.json["diagnostics"][std::to_string(n)];
    d["clip_count"] = report.diagnostics.clip_count;
    d["separation_warnings"] = report.diagnostics.separation_warnings;
    d["bootstrap_redraws"] = report.diagnostics.redraws;
    d["bootstrap_ridge"] = report.diagnostics.ridged;
    d["failed_replicates"] = report.failed_replicates;
    all_records.insert(all_records.end(), records.begin(), records.end());
  }

  const std::string header = config_header(c);
  {
    auto f = open_output(dir / "records.csv");
    f << header;
    write_records_csv(f, c.scenario, all_records);
  }
  {
    auto f = open_output(dir / "report.csv");
    f << header;
    write_report_csv(f, combined);
  }
  manifest.json["files"] = {"records.csv", "report.csv"};
  for (const auto& f : combined.failures) manifest.json["failures"].push_back(f);
  manifest.json["failed_replicates"] = combined.failed_replicates;
  manifest.write(dir);

  out << "method,n,coverage,se_ratio,rmse,scaled_rmse\n";
  for (const auto& r : combined.rows) {
    out << r.method << ',' << r.n << ',' << fmt(r.coverage) << ',' << fmt(r.se_ratio) << ','
        << fmt(r.rmse) << ',' << fmt(r.scaled_rmse) << '\n';
  }
  if (combined.failed_replicates > 0) {
    out << combined.failed_replicates << " of " << combined.replicates
        << " replicates had a failing method\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(combined.failures.size(), 5); ++i) {
      out << "  " << combined.failures[i] << '\n';
    }
  }
  return threshold_exceeded ? failure_threshold : success;
}

std::vector<Index> sorted_positions(const Vector& estimate) {
  std::vector<Index> order(static_cast<std::size_t>(estimate.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return estimate[a] < estimate[b]; });
  std::vector<Index> position(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) position[static_cast<std::size_t>(order[k])] = static_cast<Index>(k);
  return position;
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
  const auto options = estimator_options(c);
  const auto methods = parse_methods(method_names(c));
  const Dataset data = load_dataset(c);
  Matrix query;
  if (c.query == "observed") {
    query = data.v();
  } else if (c.query == "file") {
    require(c.query_file, "query-file");
    query = read_query_file(c.query_file, c.modifiers);
  } else {
    throw ConfigError("query must be 'observed' or 'file' for analyze, got '" + c.query + "'");
  }
  auto external = external_draws(c, methods);
  Pipeline pipeline(data, options, c.seed, std::move(external));

  const fs::path dir = c.out;
  fs::create_directories(dir);
  Manifest manifest(c);
  auto f = open_output(dir / "cate.csv");
  f << config_header(c);
  csv::write_row(f, {"method", "location", "estimate", "se", "lower", "upper", "bootstrap_term",
                     "posterior_term", "sorted_index"});
  for (const auto& method : methods) {
    const auto r = pipeline.run(method, query);
    const auto position = sorted_positions(r.estimate);
    for (Index j = 0; j < r.estimate.size(); ++j) {
      csv::write_row(f, {r.method, std::to_string(j), fmt(r.estimate[j]), fmt(r.se[j]),
                         fmt(r.lower[j]), fmt(r.upper[j]), fmt(r.bootstrap_term[j]),
                         fmt(r.posterior_term[j]), std::to_string(position[static_cast<std::size_t>(j)])});
    }
    add_diagnostics(manifest.json, r);
    out << r.method << ": " << r.estimate.size() << " locations, mean estimate "
        << fmt(r.estimate.mean()) << ", clipped propensities " << r.clip_count << '\n';
  }
  manifest.json["files"] = {"cate.csv"};
  manifest.json["units"] = data.n();
  manifest.json["treated"] = data.treated_count();
  manifest.write(dir);
  return success;
}

std::string file_stem(const std::string& name) {
  std::string s = name;
  for (auto& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  return s;
}

int cmd_univariate(const RunConfig& c, std::ostream& out) {
  const auto options = estimator_options(c);
  const auto methods = parse_methods(c.methods);
  if (c.crossfit) throw ConfigError("crossfit is not available for univariate curves");
  if (c.grid < 2) throw ConfigError("grid must be at least 2");
  const Dataset data = load_dataset(c);
  auto external = external_draws(c, methods);
  Pipeline pipeline(data, options, c.seed, std::move(external));

  const std::vector<std::string> curves = c.curves.empty() ? c.modifiers : c.curves;
  const auto& modifier_names = data.names().modifiers;
  const fs::path dir = c.out;
  fs::create_directories(dir);
  Manifest manifest(c);
  const std::string header = config_header(c);
  for (const auto& name : curves) {
    const auto it = std::find(modifier_names.begin() + 1, modifier_names.end(), name);
    if (it == modifier_names.end()) {
      throw ConfigError("curves: '" + name + "' is not one of the modifiers");
    }
    const Vector values = data.v().col(it - modifier_names.begin());
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
    if (distinct < 2) throw DomainError("modifier '" + name + "' is constant");
    sorted.assign(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    BasisSpec spec{BasisKind::natural_spline, c.spline_df};
    std::string basis_note = "spline";
    if (distinct < c.spline_df + 1) {
      spec.kind = BasisKind::linear;
      basis_note = "linear (fallback: " + std::to_string(distinct) + " distinct values)";
    }
    const Dataset second = data.with_modifiers(Matrix(values), {name});
    const double lo = sorted_quantile(sorted, 0.025);
    const double hi = sorted_quantile(sorted, 0.975);
    Matrix query(c.grid, 2);
    query.col(0).setOnes();
    for (Index g = 0; g < c.grid; ++g) {
      query(g, 1) = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(c.grid - 1);
    }

    const std::string file = "univariate_" + file_stem(name) + ".csv";
    auto f = open_output(dir / file);
    f << header << "# curve for " << name << ", basis " << basis_note << '\n';
    csv::write_row(f, {"method", "grid_value", "estimate", "se", "lower", "upper"});
    for (const auto& method : methods) {
      const auto r = pipeline.run_second_stage(method, second, spec, query);
      for (Index g = 0; g < c.grid; ++g) {
        csv::write_row(f, {r.method, fmt(query(g, 1)), fmt(r.estimate[g]), fmt(r.se[g]),
                           fmt(r.lower[g]), fmt(r.upper[g])});
      }
      add_diagnostics(manifest.json["curves"][name], r);
    }
    manifest.json["files"].push_back(file);
    manifest.json["curves"][name]["basis"] = basis_note;
    out << name << ": " << basis_note << ", written to " << file << '\n';
  }
  manifest.write(dir);
  return success;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::map<std::string, std::string> kv;
  kv["methods"] = join(methods);
  kv["crossfit"] = crossfit ? "true" : "false";
  kv["draws"] = std::to_string(draws);
  kv["burnin"] = std::to_string(burnin);
  kv["resamples"] = std::to_string(resamples);
  kv["seed"] = std::to_string(seed);
  kv["clip"] = fmt(clip);
  kv["basis"] = basis;
  kv["spline-df"] = std::to_string(spline_df);
  kv["level"] = fmt(level);
  kv["outcome-terms"] = outcome_terms;
  kv["propensity-terms"] = propensity_terms;
  kv["standardize"] = standardize ? "true" : "false";
  if (command == "simulate") {
    kv["scenario"] = scenario;
    kv["n"] = join(n);
    kv["p"] = std::to_string(p);
    kv["replicates"] = std::to_string(replicates);
    kv["query"] = query;
    kv["query-count"] = std::to_string(query_count);
    kv["fixed-query"] = fixed_query ? "true" : "false";
  } else {
    kv["data"] = data;
    kv["outcome"] = outcome;
    kv["treatment"] = join(treatment);
    kv["confounders"] = join(confounders);
    kv["modifiers"] = join(modifiers);
    kv["dichotomize"] = dichotomize ? "true" : "false";
    if (command == "analyze") {
      kv["query"] = query;
      kv["query-file"] = query_file;
    } else {
      kv["curves"] = join(curves);
      kv["grid"] = std::to_string(grid);
    }
    kv["external-p1"] = external_p1;
    kv["external-m1"] = external_m1;
    kv["external-m0"] = external_m0;
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& [k, v] : kv) {
    if (!v.empty()) out.emplace_back(k, v);
  }
  return out;
}

std::string config_header(const RunConfig& config) {
  std::string h = "# drcate " + config.command + "\n";
  for (const auto& [k, v] : config.echo()) h += "# " + k + "=" + v + "\n";
  return h;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Doubly robust CATE estimation from posterior draws", "drcate"};
  app.config_formatter(std::make_shared<KeyValueConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Read settings from a key=value file or a previous output file");
  app.add_option("command", c.command, "simulate | analyze | univariate")
      ->required()
      ->check(CLI::IsMember({"simulate", "analyze", "univariate"}));

  app.add_option("--scenario", c.scenario, "linear | nonlinear | highdim | nonlinear_tau");
  app.add_option("--n", c.n, "Sample sizes, comma separated")->delimiter(',');
  app.add_option("--p", c.p, "Confounder count (0 = scenario default)");
  app.add_option("--replicates", c.replicates, "Simulation replicates per sample size");
  app.add_option("--query", c.query, "random | observed | file");
  app.add_option("--query-count", c.query_count, "Random query points per replicate");
  app.add_flag("--fixed-query", c.fixed_query, "Draw random query points once for all replicates");

  app.add_option("--methods", c.methods, "DR-Linear, DR-SpikeSlab, DR-External, DML-Baseline")
      ->delimiter(',');
  app.add_flag("--crossfit", c.crossfit, "Also run cross-fitted variants of DR methods");
  app.add_option("--draws", c.draws, "Retained posterior draws (B)");
  app.add_option("--burnin", c.burnin, "Burn-in iterations");
  app.add_option("--resamples", c.resamples, "Bootstrap resamples (M)");
  app.add_option("--seed", c.seed, "Master seed");
  app.add_option("--clip", c.clip, "Propensity clipping bound");
  app.add_option("--basis", c.basis, "Second stage: linear | spline");
  app.add_option("--spline-df", c.spline_df, "Natural spline degrees of freedom per modifier");
  app.add_option("--level", c.level, "Confidence level");
  app.add_option("--outcome-terms", c.outcome_terms, "Outcome model terms: full | intercept");
  app.add_option("--propensity-terms", c.propensity_terms,
                 "Propensity model terms: full | intercept");
  app.add_option("--standardize", c.standardize, "Standardize confounders before fitting");

  app.add_option("--data", c.data, "Input CSV");
  app.add_option("--outcome", c.outcome, "Outcome column");
  app.add_option("--treatment", c.treatment, "Treatment column(s); several are dichotomized")
      ->delimiter(',');
  app.add_option("--confounders", c.confounders, "Confounder columns")->delimiter(',');
  app.add_option("--modifiers", c.modifiers, "Effect modifier columns")->delimiter(',');
  app.add_flag("--dichotomize", c.dichotomize, "Dichotomize a non-binary treatment column");
  app.add_option("--query-file", c.query_file, "CSV of query points (modifier columns)");
  app.add_option("--external-p1", c.external_p1, "Propensity draws, B x n CSV");
  app.add_option("--external-m1", c.external_m1, "Treated outcome draws, B x n CSV");
  app.add_option("--external-m0", c.external_m0, "Control outcome draws, B x n CSV");
  app.add_option("--curves", c.curves, "Modifiers to curve (default: all)")->delimiter(',');
  app.add_option("--grid", c.grid, "Grid points per curve");

  app.add_option("--out", c.out, "Output directory");
  app.add_option("--threads", c.threads, "Worker cap (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? success : usage;
  }

  try {
    if (c.command == "simulate") {
      if (c.query.empty()) c.query = "random";
      return cmd_simulate(c, out);
    }
    if (c.query == "random") c.query = "observed";
    if (c.command == "analyze") return cmd_analyze(c, out);
    return cmd_univariate(c, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  }
}

}  // namespace drcate::cli
