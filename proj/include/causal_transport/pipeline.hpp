#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "causal_transport/data.hpp"
#include "causal_transport/estimators_effect.hpp"
#include "causal_transport/estimators_mean.hpp"
#include "causal_transport/nuisance.hpp"
#include "causal_transport/report.hpp"

namespace ct {

/// Canonical ids: wht, neyman, wG, tG, ee, os:{wht,wG,tG,ee}, effect/tgamma, effect/wgamma,
/// effect/ee, effect/os:{tgamma,wgamma,ee}. "os" and "effect/os" use the transported initializers.
std::string canonical_estimator(const std::string& id);
std::vector<std::string> estimator_ids();
bool is_effect_estimator(const std::string& canonical);
bool has_sandwich(const std::string& canonical);

struct PipelineOptions {
  NuisanceOptions nuisance;
  int folds = 1;
  std::uint64_t fold_seed = 0;
  Propensity ee_propensity = Propensity::Known;
  bool sandwich = true;
  bool oracle_variance = true;
  double level = 0.95;
};

/// Nuisances fitted once for a dataset and shared across cells.
struct PreparedData {
  const StudyData* data = nullptr;
  std::optional<NuisanceFit> fit;  // only when folds == 1
  NuisanceValues values;
};

PreparedData prepare(const StudyData& d, const PipelineOptions& opt);

/// One cell; domain/capability failures are returned in the report, not thrown.
EstimateReport estimate_cell(const PreparedData& pd, const std::string& estimator, const EffectMeasure& m,
                             const PipelineOptions& opt);

/// All (estimator, measure) cells, estimator-major. Nuisance failures mark every cell.
std::vector<EstimateReport> estimate_all(const StudyData& d, const std::vector<std::string>& estimators,
                                         const std::vector<std::string>& measures, const PipelineOptions& opt);

struct BootstrapConfig {
  int B = 200;
  double level = 0.95;
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_distribution = false;
};

struct BootstrapResult {
  double lo = 0, hi = 0, level = 0.95;
  int replicates = 0, failures = 0;
  std::map<std::string, int> failure_modes;
  std::vector<double> distribution;
};

/// Stratified resampling: (S=1, A=1), (S=1, A=0), target controls, other target rows.
std::vector<Index> stratified_resample(const StudyData& d, std::uint64_t seed);

/// One result per (estimator, measure) cell in estimate_all order. A cell whose estimator fails
/// in more than 5% of replicates is returned with failures set and lo = hi = NaN.
std::vector<BootstrapResult> bootstrap_all(const StudyData& d, const std::vector<std::string>& estimators,
                                           const std::vector<std::string>& measures, const PipelineOptions& opt,
                                           const BootstrapConfig& cfg);

/// Throws BootstrapError when more than 5% of replicates fail.
BootstrapResult bootstrap_ci(const StudyData& d, const std::string& estimator, const EffectMeasure& m,
                             const PipelineOptions& opt, const BootstrapConfig& cfg);

/// Percentile of sorted values, linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace ct
