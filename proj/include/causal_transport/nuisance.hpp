#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "causal_transport/data.hpp"
#include "causal_transport/measures.hpp"

namespace ct {

enum class Link { Identity, Logit };
enum class LinkChoice { Auto, Identity, Logit };

LinkChoice parse_link(const std::string& s);
const char* link_name(Link l);
/// Logit when every observed source outcome is 0 or 1.
Link resolve_link(LinkChoice c, const StudyData& d);

using RowRef = Eigen::Ref<const Eigen::RowVectorXd>;
using RowFn = std::function<double(const RowRef&)>;

double sigmoid(double eta);

struct LogisticFit {
  Eigen::VectorXd beta;  // intercept first
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0;
  std::vector<double> trace;  // gradient max-norm per iteration
};

struct LogisticOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

/// Newton-Raphson with step halving. v already carries the intercept column.
LogisticFit fit_logistic(const Eigen::MatrixXd& v, const Eigen::VectorXd& y, const LogisticOptions& opt = {});
LogisticFit fit_selection_logistic(const StudyData& d, double tol = 1e-8, int max_iter = 100);

/// Least squares on v (intercept included); throws on rank deficiency.
Eigen::VectorXd fit_ols(const Eigen::MatrixXd& v, const Eigen::VectorXd& y);

/// x -> g(beta' [1, x]) or an arbitrary user surface.
struct Surface {
  Link link = Link::Identity;
  Eigen::VectorXd beta;
  RowFn custom;

  bool parametric() const { return !custom; }
  double operator()(const RowRef& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  static Surface constant(double c);
  static Surface function(RowFn f);
};

struct OutcomeFit {
  Link link = Link::Identity;
  Surface mu0, mu1;
  const Surface& arm(int a) const { return a == 1 ? mu1 : mu0; }
};

OutcomeFit fit_outcomes(const StudyData& d, Link link);
Surface fit_mu0_target(const StudyData& d, Link link);

/// r(x) = n/(N-n) (1 - sigma(x)) / sigma(x). clip > 0 clamps sigma to [clip, 1 - clip].
struct DensityRatio {
  Eigen::VectorXd beta;
  double scale = 1.0;
  double clip = 0.0;
  RowFn custom;

  bool parametric() const { return !custom; }
  double sigma(const RowRef& x) const;
  double operator()(const RowRef& x) const;
  /// Evaluates rows with s == 1 (all rows when source_only is false); other entries are NaN.
  Eigen::VectorXd evaluate(const StudyData& d, bool source_only, Index* clipped = nullptr) const;
  static DensityRatio constant(double c);
  static DensityRatio function(RowFn f);
};

DensityRatio density_ratio(const LogisticFit& fit, const StudyData& d, double clip = 0.0);

using Cate = std::function<double(const RowRef&)>;
Cate plug_in_cate(const EffectMeasure& m, const OutcomeFit& mu);

struct Fold {
  std::vector<Index> train, eval;
};

/// Stratified on (s, a); deterministic given seed.
std::vector<Fold> crossfit_split(const StudyData& d, int k, std::uint64_t seed);

struct NuisanceOptions {
  LinkChoice link = LinkChoice::Auto;
  double tol = 1e-8;
  int max_iter = 100;
  double ratio_clip = 0.0;
  bool fit_target = true;  // fit mu0^T when target controls exist
  std::optional<DensityRatio> ratio_override;
  std::optional<OutcomeFit> outcome_override;
};

struct NuisanceFit {
  std::optional<LogisticFit> selection;
  DensityRatio ratio;
  OutcomeFit mu_s;
  std::optional<Surface> mu0_t;
  double alpha_hat = 0;
  double pi = 0.5;
};

NuisanceFit fit_nuisances(const StudyData& d, const NuisanceOptions& opt = {});

/// Nuisances evaluated row-wise; the estimators only see these.
struct NuisanceValues {
  Eigen::VectorXd ratio;  // NaN on target rows
  Eigen::VectorXd mu1, mu0;
  Eigen::VectorXd mu0_t;  // empty when no target model
  double alpha_hat = 0;
  double pi = 0.5;
  Index clipped = 0;
  int folds = 1;
  bool has_target() const { return mu0_t.size() > 0; }
};

NuisanceValues evaluate_nuisances(const NuisanceFit& nf, const StudyData& d);
NuisanceValues crossfit_nuisances(const StudyData& d, const NuisanceOptions& opt, int k, std::uint64_t seed);

}  // namespace ct
