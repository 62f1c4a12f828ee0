#pragma once

#include <Eigen/Dense>

#include "causal_transport/data.hpp"
#include "causal_transport/measures.hpp"
#include "causal_transport/nuisance.hpp"
#include "causal_transport/report.hpp"

namespace ct {

/// Row-wise nuisances under effect-measure exchangeability.
struct EffectNuisance {
  Eigen::VectorXd cate;   // Phi(mu1^S, mu0^S) at every row
  Eigen::VectorXd mu0_s;  // mu0^S
  Eigen::VectorXd mu0_t;  // mu0^T
  Eigen::VectorXd ratio;  // NaN on target rows
  double psi0_t = 0;      // mean outcome among target controls
  double alpha_hat = 0;
  double pi = 0.5;
  int folds = 1;
};

/// Throws CapabilityError without target-control outcomes, DomainError (with row) when the
/// CATE cannot be formed.
EffectNuisance effect_nuisance(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv);

/// Where dGamma/dpsi0 is evaluated in the control-residual term.
enum class DerivativeBaseline { Target, Source };
/// Source for OR, Target otherwise.
DerivativeBaseline default_baseline(const EffectMeasure& m);

EstimateReport gamma_transported(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en);
EstimateReport gamma_weighted(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en);

Eigen::VectorXd eif_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en, double psi1,
                           DerivativeBaseline base = DerivativeBaseline::Target);

/// Root of the empirical influence function in psi1.
double ee_effect_psi1(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                      DerivativeBaseline base);
EstimateReport ee_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en);
EstimateReport ee_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                         DerivativeBaseline base);

enum class EffectInitializer { GammaTransported, GammaWeighted, EE };
EffectInitializer parse_effect_initializer(const std::string& s);
const char* effect_initializer_name(EffectInitializer i);

EstimateReport one_step_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                               EffectInitializer init = EffectInitializer::GammaTransported);
EstimateReport one_step_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                               EffectInitializer init, DerivativeBaseline base);

}  // namespace ct
