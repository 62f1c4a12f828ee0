#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ct {

/// Returns nullptr when the arguments are admissible, otherwise a short
/// description of the violated constraint.
using Check = const char* (*)(double, double);
using Fn2 = double (*)(double, double);

/// A first-moment effect measure: Phi(psi1, psi0), its inverse in the first
/// argument Gamma(tau, psi0) and the four partials.
struct EffectMeasure {
  std::string name;
  Fn2 phi;
  Fn2 gamma;
  Fn2 dphi_d1;
  Fn2 dphi_d0;
  Fn2 dgamma_dtau;
  Fn2 dgamma_dpsi0;
  Check phi_check;     // (psi1, psi0)
  Check dphi_check;    // (psi1, psi0)
  Check gamma_check;   // (tau, psi0)
  Check dgamma_check;  // (tau, psi0)
  std::optional<double> null_value;

  bool domain(double psi1, double psi0) const { return phi_check(psi1, psi0) == nullptr; }
  bool gamma_domain(double tau, double psi0) const { return gamma_check(tau, psi0) == nullptr; }
};

/// Case-insensitive lookup; throws LookupError listing the valid names.
const EffectMeasure& get_measure(std::string_view name);
const std::vector<EffectMeasure>& all_measures();
std::vector<std::string> measure_names();

// Checked evaluation. Each throws DomainError naming the measure and the
// violated constraint.
double eval_phi(const EffectMeasure& m, double psi1, double psi0);
double eval_gamma(const EffectMeasure& m, double tau, double psi0);
double eval_dphi_d1(const EffectMeasure& m, double psi1, double psi0);
double eval_dphi_d0(const EffectMeasure& m, double psi1, double psi0);
double eval_dgamma_dtau(const EffectMeasure& m, double tau, double psi0);
double eval_dgamma_dpsi0(const EffectMeasure& m, double tau, double psi0);

/// One line per measure from the registry self-test.
struct MeasureCheck {
  std::string name;
  int points = 0;
  double max_roundtrip_error = 0;
  double max_derivative_rel_error = 0;
  double max_chain_rule_error = 0;
  bool passed = false;
};

/// Random domain point generator shared by the self-test and the test suite.
/// Returns false when the draw is rejected.
bool sample_domain_point(const EffectMeasure& m, double u1, double u0, double& psi1, double& psi0);

MeasureCheck self_test(const EffectMeasure& m, int points, unsigned long long seed);

}  // namespace ct
