#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "causal_transport/data.hpp"
#include "causal_transport/measures.hpp"
#include "causal_transport/mestimation.hpp"
#include "causal_transport/nuisance.hpp"
#include "causal_transport/report.hpp"

namespace ct {

/// Known pi, or the empirical arm shares within the source.
enum class Propensity { Known, Estimated };

struct ArmMeans {
  double psi1 = 0, psi0 = 0;
  double correction1 = 0, correction0 = 0;
  std::string method;
};

/// P(A = a) under the chosen convention.
double arm_probability(const StudyData& d, int a, Propensity mode);

ArmMeans wht_arm_means(const StudyData& d, const NuisanceValues& nv, Propensity mode = Propensity::Known);
ArmMeans g_weighted_arm_means(const StudyData& d, const NuisanceValues& nv);
ArmMeans g_transported_arm_means(const StudyData& d, const NuisanceValues& nv);
ArmMeans ee_arm_means(const StudyData& d, const NuisanceValues& nv, Propensity mode = Propensity::Known);

/// Report with estimate = Phi(psi1, psi0) and the arm means in diagnostics.
EstimateReport plug_in_report(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv,
                              const ArmMeans& am, const std::string& estimator);

EstimateReport wht(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv);
EstimateReport neyman(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv);
EstimateReport g_weighted(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv);
EstimateReport g_transported(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv);
EstimateReport ee(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv,
                  Propensity mode = Propensity::Known);

enum class Initializer { Wht, GWeighted, GTransported, EE };
Initializer parse_initializer(const std::string& s);
const char* initializer_name(Initializer i);
ArmMeans initial_arm_means(const StudyData& d, const NuisanceValues& nv, Initializer init);

/// Closed-form one-step correction for RD, RR and OR; empty for other measures.
/// c = m / (N (1 - alpha)).
std::optional<double> one_step_closed_form(const EffectMeasure& m, const ArmMeans& init, const ArmMeans& eem,
                                           double c);

EstimateReport one_step(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv,
                        Initializer init = Initializer::GTransported, Propensity mode = Propensity::Known);
EstimateReport one_step_from(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv,
                             const ArmMeans& init, const std::string& init_name,
                             Propensity mode = Propensity::Known);

/// phi_a(Z_i) for one arm.
Eigen::VectorXd eif_arm(const StudyData& d, const NuisanceValues& nv, int a, double psi_a,
                        Propensity mode = Propensity::Known);
/// dPhi/dpsi1 phi_1 + dPhi/dpsi0 phi_0, row-wise.
Eigen::VectorXd eif_mean(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv, double psi1,
                         double psi0, Propensity mode = Propensity::Known);

/// Asymptotic variance V of sqrt(N)(tau_hat - tau) for wht; SE = sqrt(V / N).
double variance_oracle_wht(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv);

/// Stacked system for one of wht, neyman, wG, tG, ee under parametric nuisances.
/// theta = (psi0, psi1, ...).
EstimatingSystem build_system(const StudyData& d, const std::string& estimator, const NuisanceFit& nf,
                              Propensity mode = Propensity::Known);

/// Asymptotic variance V of tau_hat from the sandwich; SE = sqrt(V / N).
double variance_sandwich(const StudyData& d, const std::string& estimator, const EffectMeasure& m,
                         const NuisanceFit& nf, Propensity mode = Propensity::Known);

}  // namespace ct
