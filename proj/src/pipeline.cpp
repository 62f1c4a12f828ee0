#include "causal_transport/pipeline.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "causal_transport/errors.hpp"
#include "causal_transport/parallel.hpp"

namespace ct {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

EstimateReport failed(const std::string& est, const std::string& measure, const StudyData& d, const Error& e) {
  EstimateReport r;
  r.estimator = est;
  r.measure = measure;
  r.n = d.n();
  r.m = d.m();
  r.error = e.what();
  r.error_kind = e.kind();
  return r;
}

EstimateReport compute(const PreparedData& pd, const std::string& id, const EffectMeasure& m,
                       const PipelineOptions& opt, std::map<std::string, EffectNuisance>& cache) {
  const StudyData& d = *pd.data;
  const NuisanceValues& nv = pd.values;
  if (is_effect_estimator(id)) {
    auto it = cache.find(m.name);
    if (it == cache.end()) it = cache.emplace(m.name, effect_nuisance(d, m, nv)).first;
    const EffectNuisance& en = it->second;
    if (id == "effect/tgamma") return gamma_transported(d, m, en);
    if (id == "effect/wgamma") return gamma_weighted(d, m, en);
    if (id == "effect/ee") return ee_effect(d, m, en);
    return one_step_effect(d, m, en, parse_effect_initializer(id.substr(10)));
  }
  if (id == "wht") return wht(d, m, nv);
  if (id == "neyman") return neyman(d, m, nv);
  if (id == "wG") return g_weighted(d, m, nv);
  if (id == "tG") return g_transported(d, m, nv);
  if (id == "ee") return ee(d, m, nv, opt.ee_propensity);
  return one_step(d, m, nv, parse_initializer(id.substr(3)), opt.ee_propensity);
}

EstimateReport cell(const PreparedData& pd, const std::string& estimator, const EffectMeasure& m,
                    const PipelineOptions& opt, std::map<std::string, EffectNuisance>& cache) {
  const StudyData& d = *pd.data;
  std::string id;
  try {
    id = canonical_estimator(estimator);
  } catch (const Error& e) {
    return failed(estimator, m.name, d, e);
  }
  EstimateReport r;
  try {
    r = compute(pd, id, m, opt, cache);
  } catch (const Error& e) {
    return failed(id, m.name, d, e);
  }
  r.estimator = id;
  r.level = opt.level;
  if (opt.sandwich && has_sandwich(id)) {
    if (pd.fit) {
      try {
        double v = variance_sandwich(d, id, m, *pd.fit, opt.ee_propensity);
        double se = std::sqrt(v / double(d.N()));
        double z = normal_quantile(0.5 + opt.level / 2);
        r.std_error = se;
        r.ci = std::array<double, 2>{r.estimate - z * se, r.estimate + z * se};
        r.diagnostics["se_method"] = "sandwich";
      } catch (const Error& e) {
        r.diagnostics["se_error"] = e.what();
      }
    } else {
      r.diagnostics["se_error"] = "sandwich variance needs full-sample nuisances (folds = 1)";
    }
  }
  if (opt.oracle_variance && id == "wht") {
    try {
      r.diagnostics["se_oracle"] = std::sqrt(variance_oracle_wht(d, m, pd.values) / double(d.N()));
    } catch (const Error& e) {
      r.diagnostics["se_oracle_error"] = e.what();
    }
  }
  return r;
}

}  // namespace

std::string canonical_estimator(const std::string& id) {
  static const std::map<std::string, std::string> alias = {
      {"wht", "wht"},
      {"neyman", "neyman"},
      {"wG", "wG"},
      {"wg", "wG"},
      {"g_weighted", "wG"},
      {"tG", "tG"},
      {"tg", "tG"},
      {"g_transported", "tG"},
      {"ee", "ee"},
      {"os", "os:tG"},
      {"one_step", "os:tG"},
      {"effect/tgamma", "effect/tgamma"},
      {"effect/gamma_transported", "effect/tgamma"},
      {"effect/wgamma", "effect/wgamma"},
      {"effect/gamma_weighted", "effect/wgamma"},
      {"effect/ee", "effect/ee"},
      {"effect/os", "effect/os:tgamma"},
      {"effect/one_step", "effect/os:tgamma"},
      {"effect/os-at-ee", "effect/os:ee"},
      {"effect/os-at-EE", "effect/os:ee"},
  };
  auto it = alias.find(id);
  if (it != alias.end()) return it->second;
  if (id.rfind("os:", 0) == 0) return std::string("os:") + initializer_name(parse_initializer(id.substr(3)));
  if (id.rfind("effect/os:", 0) == 0)
    return std::string("effect/os:") + effect_initializer_name(parse_effect_initializer(id.substr(10)));
  std::string valid;
  for (const auto& e : estimator_ids()) valid += (valid.empty() ? "" : ", ") + e;
  throw LookupError("unknown estimator '" + id + "'; valid: " + valid);
}

std::vector<std::string> estimator_ids() {
  return {"wht",      "neyman",  "wG",           "tG",            "ee",        "os:wht",
          "os:wG",    "os:tG",   "os:ee",        "effect/tgamma", "effect/wgamma", "effect/ee",
          "effect/os:tgamma", "effect/os:wgamma", "effect/os:ee"};
}

bool is_effect_estimator(const std::string& id) { return id.rfind("effect/", 0) == 0; }

bool has_sandwich(const std::string& id) {
  return id == "wht" || id == "neyman" || id == "wG" || id == "tG" || id == "ee";
}

PreparedData prepare(const StudyData& d, const PipelineOptions& opt) {
  PreparedData pd;
  pd.data = &d;
  if (opt.folds <= 1) {
    pd.fit = fit_nuisances(d, opt.nuisance);
    pd.values = evaluate_nuisances(*pd.fit, d);
  } else {
    pd.values = crossfit_nuisances(d, opt.nuisance, opt.folds, opt.fold_seed);
  }
  return pd;
}

EstimateReport estimate_cell(const PreparedData& pd, const std::string& estimator, const EffectMeasure& m,
                             const PipelineOptions& opt) {
  std::map<std::string, EffectNuisance> cache;
  return cell(pd, estimator, m, opt, cache);
}

std::vector<EstimateReport> estimate_all(const StudyData& d, const std::vector<std::string>& estimators,
                                         const std::vector<std::string>& measures, const PipelineOptions& opt) {
  std::vector<const EffectMeasure*> ms;
  for (const auto& name : measures) ms.push_back(&get_measure(name));
  std::vector<EstimateReport> out;
  PreparedData pd;
  try {
    pd = prepare(d, opt);
  } catch (const Error& e) {
    for (const auto& est : estimators)
      for (const auto* m : ms) out.push_back(failed(est, m->name, d, e));
    return out;
  }
  std::map<std::string, EffectNuisance> cache;
  for (const auto& est : estimators)
    for (const auto* m : ms) out.push_back(cell(pd, est, *m, opt, cache));
  return out;
}

std::vector<Index> stratified_resample(const StudyData& d, std::uint64_t seed) {
  std::vector<Index> strata[4];
  for (Index i = 0; i < d.N(); ++i) {
    int k = d.s(i) == 1 ? (d.a(i) == 1 ? 0 : 1) : (d.is_target_control(i) ? 2 : 3);
    strata[k].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<Index> out;
  out.reserve(d.N());
  for (const auto& s : strata) {
    if (s.empty()) continue;
    std::uniform_int_distribution<size_t> pick(0, s.size() - 1);
    for (size_t k = 0; k < s.size(); ++k) out.push_back(s[pick(rng)]);
  }
  return out;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return kNaN;
  double h = q * double(v.size() - 1);
  size_t lo = size_t(std::floor(h));
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

std::vector<BootstrapResult> bootstrap_all(const StudyData& d, const std::vector<std::string>& estimators,
                                           const std::vector<std::string>& measures, const PipelineOptions& opt,
                                           const BootstrapConfig& cfg) {
  if (cfg.B < 100) throw ValidationError("bootstrap needs B >= 100");
  if (!(cfg.level > 0 && cfg.level < 1)) throw ValidationError("bootstrap level must lie in (0, 1)");
  const size_t cells = estimators.size() * measures.size();
  std::vector<std::vector<double>> est(cfg.B, std::vector<double>(cells, kNaN));
  std::vector<std::vector<std::string>> err(cfg.B, std::vector<std::string>(cells));
  PipelineOptions o = opt;
  o.sandwich = false;
  o.oracle_variance = false;
  parallel_for(cfg.B, cfg.threads, [&](std::int64_t b) {
    std::uint64_t s = stream_seed(cfg.seed, std::uint64_t(b));
    StudyData db = d.rows(stratified_resample(d, s));
    PipelineOptions ob = o;
    ob.fold_seed = splitmix64(s);
    auto reps = estimate_all(db, estimators, measures, ob);
    for (size_t c = 0; c < cells; ++c) {
      if (reps[c].ok())
        est[b][c] = reps[c].estimate;
      else
        err[b][c] = reps[c].error_kind + ": " + *reps[c].error;
    }
  });
  std::vector<BootstrapResult> out(cells);
  for (size_t c = 0; c < cells; ++c) {
    BootstrapResult& r = out[c];
    r.level = cfg.level;
    r.replicates = cfg.B;
    std::vector<double> vals;
    for (int b = 0; b < cfg.B; ++b) {
      if (err[b][c].empty()) {
        vals.push_back(est[b][c]);
      } else {
        ++r.failures;
        std::string mode = err[b][c].substr(0, err[b][c].find(" ("));
        r.failure_modes[mode.substr(0, 160)]++;
      }
    }
    if (cfg.keep_distribution) r.distribution = vals;
    if (r.failures > 0.05 * cfg.B) {
      r.lo = r.hi = kNaN;
      continue;
    }
    std::sort(vals.begin(), vals.end());
    r.lo = quantile_sorted(vals, (1 - cfg.level) / 2);
    r.hi = quantile_sorted(vals, (1 + cfg.level) / 2);
  }
  return out;
}

BootstrapResult bootstrap_ci(const StudyData& d, const std::string& estimator, const EffectMeasure& m,
                             const PipelineOptions& opt, const BootstrapConfig& cfg) {
  auto r = bootstrap_all(d, {estimator}, {m.name}, opt, cfg).front();
  if (r.failures > 0.05 * cfg.B) {
    std::string modes;
    for (const auto& [k, v] : r.failure_modes) modes += "\n  " + std::to_string(v) + " x " + k;
    throw BootstrapError("estimator failed in " + std::to_string(r.failures) + " of " + std::to_string(cfg.B) +
                         " bootstrap replicates:" + modes);
  }
  return r;
}

}  // namespace ct
