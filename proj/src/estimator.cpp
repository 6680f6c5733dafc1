#include "drcate/estimator.hpp"

#include "drcate/cate.hpp"
#include "drcate/errors.hpp"
#include "drcate/rng.hpp"

namespace drcate {

namespace {

constexpr std::string_view kCrossfitSuffix = "-CF";

std::uint64_t family_label(NuisanceFamily family) {
  return static_cast<std::uint64_t>(family) + 1;
}

MethodResult assemble(std::string name, const Vector& point, const VarianceBreakdown& variance,
                      double level) {
  const auto ci = confidence_intervals(point, variance.total, level);
  MethodResult out;
  out.method = std::move(name);
  out.estimate = point;
  out.se = ci.se;
  out.lower = ci.lower;
  out.upper = ci.upper;
  out.bootstrap_term = variance.bootstrap_term;
  out.posterior_term = variance.posterior_term;
  out.redraws = variance.redraws;
  out.ridged = variance.ridged;
  return out;
}

}  // namespace

MethodSpec parse_method(std::string_view name) {
  MethodSpec spec;
  spec.name = std::string(name);
  std::string_view base = name;
  if (base.size() > kCrossfitSuffix.size() && base.ends_with(kCrossfitSuffix)) {
    spec.crossfit = true;
    base.remove_suffix(kCrossfitSuffix.size());
  }
  if (base == "DR-Linear") {
    spec.family = NuisanceFamily::linear;
  } else if (base == "DR-SpikeSlab") {
    spec.family = NuisanceFamily::spike_slab;
  } else if (base == "DR-External") {
    spec.family = NuisanceFamily::external;
  } else if (base == "DML-Baseline") {
    spec.baseline = true;
  } else {
    throw ConfigError("unknown method '" + std::string(name) + "'");
  }
  if (spec.crossfit && (spec.baseline || spec.family == NuisanceFamily::external)) {
    throw ConfigError("cross-fitting is not available for method '" + std::string(base) + "'");
  }
  return spec;
}

std::vector<MethodSpec> parse_methods(const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("no methods selected");
  std::vector<MethodSpec> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

void EstimatorOptions::validate() const {
  glm.validate();
  spike_slab.validate();
  mcmc.validate();
  basis.validate();
  if (!(clip > 0.0 && clip < 0.5)) throw ConfigError("clip must lie in (0, 0.5)");
  if (resamples < 2) throw ConfigError("resamples must be at least 2");
  if (mcmc.draws < 2) throw ConfigError("draws must be at least 2");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (baseline_family == NuisanceFamily::external) {
    throw ConfigError("the baseline needs a fitted nuisance family");
  }
}

PosteriorDraws fit_nuisances(const Dataset& train, const Dataset& eval, NuisanceFamily family,
                             const EstimatorOptions& options, std::uint64_t seed) {
  const Dataset* fit_on = &train;
  const Dataset* predict_on = &eval;
  std::optional<Dataset> train_std, eval_std;
  if (options.standardize) {
    auto [scaled, record] = standardize(train);
    train_std.emplace(std::move(scaled));
    eval_std.emplace(eval.with_confounders(record.apply(eval.x())));
    fit_on = &*train_std;
    predict_on = &*eval_std;
  }
  const auto ps_seed = derive_seed(seed, {label(Stream::propensity), family_label(family)});
  const auto om_seed = derive_seed(seed, {label(Stream::outcome), family_label(family)});
  switch (family) {
    case NuisanceFamily::linear: {
      const auto ps = fit_probit_propensity(*fit_on, options.glm, options.mcmc, ps_seed,
                                            options.propensity_terms);
      const auto om = fit_linear_outcome(*fit_on, options.glm, options.mcmc, om_seed,
                                         options.outcome_terms);
      return make_posterior_draws(ps.predict(*predict_on), om.predict(*predict_on), options.clip);
    }
    case NuisanceFamily::spike_slab: {
      const auto ps = fit_spike_slab_probit(*fit_on, options.spike_slab, options.mcmc, ps_seed,
                                            options.propensity_terms);
      const auto om = fit_spike_slab_linear(*fit_on, options.spike_slab, options.mcmc, om_seed,
                                            options.outcome_terms);
      return make_posterior_draws(ps.predict(*predict_on), om.predict(*predict_on), options.clip);
    }
    case NuisanceFamily::external:
      break;
  }
  throw ConfigError("external draws cannot be fitted; supply them as files");
}

Pipeline::Pipeline(Dataset data, EstimatorOptions options, std::uint64_t seed,
                   std::optional<PosteriorDraws> external)
    : data_(std::move(data)), options_(std::move(options)), seed_(seed) {
  options_.validate();
  if (external) {
    if (external->units() != data_.n()) {
      throw SchemaError("external draws cover " + std::to_string(external->units()) +
                        " units, dataset has " + std::to_string(data_.n()));
    }
    cache_.emplace(NuisanceFamily::external, std::move(*external));
  }
}

const PosteriorDraws& Pipeline::draws(NuisanceFamily family) {
  auto it = cache_.find(family);
  if (it != cache_.end()) return it->second;
  if (family == NuisanceFamily::external) {
    throw ConfigError("DR-External needs externally supplied posterior draws");
  }
  return cache_.emplace(family, fit_nuisances(data_, data_, family, options_, seed_))
      .first->second;
}

MethodResult Pipeline::run(const MethodSpec& method, const Matrix& query) {
  if (!method.crossfit) return run_second_stage(method, data_, options_.basis, query);
  const auto& opts = options_;
  const NuisanceFamily family = method.family;
  Index clips = 0, warnings = 0;
  NuisanceFitter fitter = [&](const Dataset& train, const Dataset& eval, std::uint64_t s) {
    auto d = fit_nuisances(train, eval, family, opts, s);
    clips += d.clip_count;
    warnings += d.separation_warnings;
    return d;
  };
  const auto cf = crossfit_estimate(data_, fitter, options_.basis, query,
                                    derive_seed(seed_, {label(Stream::split)}));
  const auto boot_seed = derive_seed(seed_, {label(Stream::bootstrap)});
  const auto v0 = variance_estimate(cf.folds[0], options_.resamples, derive_seed(boot_seed, {1}));
  const auto v1 = variance_estimate(cf.folds[1], options_.resamples, derive_seed(boot_seed, {2}));
  auto out = assemble(method.name, cf.point, combine_crossfit(v0, v1), options_.level);
  out.clip_count = clips;
  out.separation_warnings = warnings;
  out.extrapolated = cf.folds[0].extrapolated + cf.folds[1].extrapolated;
  return out;
}

MethodResult Pipeline::run_second_stage(const MethodSpec& method, const Dataset& second_stage,
                                        const BasisSpec& basis, const Matrix& query) {
  if (method.crossfit) {
    throw ConfigError("cross-fitting needs the full pipeline; use run()");
  }
  if (second_stage.n() != data_.n()) {
    throw SchemaError("second-stage data must cover the same units as the pipeline");
  }
  if (method.baseline) {
    const auto& d = draws(options_.baseline_family);
    const auto fit = dml_baseline(second_stage, d, basis, query, options_.level);
    MethodResult out;
    out.method = method.name;
    out.estimate = fit.intervals.point;
    out.se = fit.intervals.se;
    out.lower = fit.intervals.lower;
    out.upper = fit.intervals.upper;
    out.bootstrap_term = Vector::Zero(query.rows());
    out.posterior_term = Vector::Zero(query.rows());
    out.clip_count = d.clip_count;
    out.separation_warnings = d.separation_warnings;
    out.extrapolated = fit.extrapolated;
    return out;
  }
  const auto& d = draws(method.family);
  const auto fit = estimate(d, second_stage, basis, query);
  const auto boot_seed = derive_seed(seed_, {label(Stream::bootstrap)});
  auto out = assemble(method.name, fit.point, variance_estimate(fit, options_.resamples, boot_seed),
                      options_.level);
  out.clip_count = d.clip_count;
  out.separation_warnings = d.separation_warnings;
  out.extrapolated = fit.extrapolated;
  return out;
}

}  // namespace drcate
