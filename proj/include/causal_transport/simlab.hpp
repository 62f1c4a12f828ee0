#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causal_transport/data.hpp"
#include "causal_transport/measures.hpp"
#include "causal_transport/nuisance.hpp"
#include "causal_transport/pipeline.hpp"
#include "causal_transport/report.hpp"

namespace ct {

enum class Design { Exp1Nonlinear, Exp2RD, Exp2RR, Exp2OR, AppELinear };

/// Coefficient vectors act on V = [1, X] (length p + 1).
///   exp1_nonlinear  mu(a) = sigmoid(beta0'V * (beta1'V)^a), both populations
///   exp2_rd         mu_S(a) = beta_a'V, mu_T(a) = (beta_a + theta)'V, Gaussian noise
///   exp2_rr         mu_P(a) = sigmoid(beta_P'V) sigmoid(gamma'V)^a
///   exp2_or         mu_P(a) = sigmoid((beta_P + a gamma)'V)
///   appE_linear     mu(a) = beta_a'V, Gaussian noise, both populations
struct DgpSpec {
  std::string name;
  Design design = Design::AppELinear;
  int p = 4;
  double alpha = 0.3;
  double pi = 0.5;
  Eigen::VectorXd nu_s, nu_t;
  Eigen::VectorXd beta0, beta1;
  Eigen::VectorXd beta_s, beta_t, gamma, theta;
  double noise_sd = 1.0;
  bool expose_target_controls = false;
  LinkChoice fit_link = LinkChoice::Auto;
  std::string calibration;

  bool continuous() const { return design == Design::Exp2RD || design == Design::AppELinear; }
  /// E[Y(a) | X = x, S = source ? 1 : 0]
  double mean(bool source, int a, const RowRef& x) const;
  void validate() const;
};

std::vector<std::string> spec_names();
/// Built-in designs; "exp1" is accepted for exp1_nonlinear. Throws LookupError.
DgpSpec builtin_spec(const std::string& name);
json spec_to_json(const DgpSpec& s);
/// Starts from the built-in named in j["name"] and overrides the fields present.
DgpSpec spec_from_json(const json& j);

struct SimData {
  StudyData data;
  Eigen::VectorXd y0, y1;  // potential outcomes, every row
  Eigen::VectorXd mu0, mu1;  // conditional means in the row's own population
};

/// Target rows carry Y(0) with A = 0 only when spec.expose_target_controls is set.
SimData generate(const DgpSpec& spec, Index N, std::uint64_t seed);

/// Source-population outcome surfaces of the DGP, usable as a correct outcome model.
OutcomeFit oracle_outcomes(const DgpSpec& spec);

struct PopulationMeans {
  double psi1 = 0, psi0 = 0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();  // covariance of (psi1, psi0) estimates
  Index draws = 0;
};

/// Antithetic Monte Carlo over M covariate draws.
PopulationMeans population_means(const DgpSpec& spec, bool source, Index M, std::uint64_t seed);
/// Scrambled-free Sobol points mapped through the normal quantile (first point skipped).
PopulationMeans population_means_qmc(const DgpSpec& spec, bool source, Index M);

struct Truth {
  std::string measure;
  double tau_t = 0, tau_s = 0;
  double se_t = 0, se_s = 0;
  double psi1_t = 0, psi0_t = 0, psi1_s = 0, psi0_s = 0;
  Index draws = 0;
};

Truth truth_from_means(const EffectMeasure& m, const PopulationMeans& target, const PopulationMeans& source);
Truth true_effects(const DgpSpec& spec, const EffectMeasure& m, Index M, std::uint64_t seed = 20240607);

struct StudyConfig {
  Index N = 5000;
  int R = 300;
  std::vector<std::string> estimators;
  std::vector<std::string> measures = {"RD", "RR", "OR"};
  std::uint64_t seed = 1;
  int threads = 1;
  Index truth_draws = 2000000;
  PipelineOptions pipeline;
  /// Called once per replication on the worker thread.
  std::function<void(int, const SimData&, const PreparedData&)> inspect;
};

struct CellSummary {
  std::string estimator, measure;
  double truth = 0, truth_se = 0;
  int successes = 0, failures = 0;
  double mean = 0, bias = 0, sd = 0, rmse = 0, mc_se = 0, z = 0;
  double coverage = std::numeric_limits<double>::quiet_NaN();
  int with_ci = 0;
  std::map<std::string, int> failure_modes;
};

struct SimulationReport {
  DgpSpec spec;
  StudyConfig config;
  std::vector<Truth> truths;
  std::vector<CellSummary> cells;
  // replication x cell
  std::vector<std::vector<double>> estimates, std_errors;
  std::vector<std::vector<char>> covered;
  std::string version;

  const CellSummary& cell(const std::string& estimator, const std::string& measure) const;
};

/// Throws StudyError when any estimator fails in more than 20% of replications.
SimulationReport run_study(const DgpSpec& spec, const StudyConfig& cfg);

json config_to_json(const StudyConfig& cfg);
json report_to_json(const SimulationReport& r);
/// estimator,measure,metric,value
std::string tidy_csv(const SimulationReport& r);
/// replication,estimator,measure,estimate,se
std::string replications_csv(const SimulationReport& r);

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& v);

}  // namespace ct
