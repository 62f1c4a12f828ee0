#include "causal_transport/estimators_effect.hpp"

#include <cmath>
#include <limits>

#include "causal_transport/errors.hpp"

namespace ct {
namespace {

double at_row(Index i, const std::function<double()>& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " at row " + std::to_string(i + 1));
  }
}

double gamma_row(const EffectMeasure& m, double tau, double psi0, Index i) {
  return at_row(i, [&] { return eval_gamma(m, tau, psi0); });
}

void diagnostics(EstimateReport& r, const StudyData& d, const EffectNuisance& en) {
  r.n = d.n();
  r.m = d.m();
  r.diagnostics["alpha_hat"] = d.alpha_hat();
  r.diagnostics["pi"] = d.pi;
  r.diagnostics["folds"] = en.folds;
  r.diagnostics["psi0_t"] = en.psi0_t;
  r.diagnostics["target_controls"] = d.target_control_count();
}

}  // namespace

EffectNuisance effect_nuisance(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv) {
  if (!d.has_target_controls() || !nv.has_target())
    throw CapabilityError("effect-measure estimators need target-control outcomes (S=0, A=0, Y observed); "
                          "use the mean-exchangeability estimators (wht, neyman, wG, tG, ee, os) instead");
  EffectNuisance en;
  en.mu0_s = nv.mu0;
  en.mu0_t = nv.mu0_t;
  en.ratio = nv.ratio;
  en.alpha_hat = nv.alpha_hat;
  en.pi = nv.pi;
  en.folds = nv.folds;
  en.cate.resize(d.N());
  for (Index i = 0; i < d.N(); ++i) en.cate(i) = at_row(i, [&] { return eval_phi(m, nv.mu1(i), nv.mu0(i)); });
  double acc = 0;
  Index c = 0;
  for (Index i = 0; i < d.N(); ++i)
    if (d.is_target_control(i)) {
      acc += d.y(i);
      ++c;
    }
  en.psi0_t = acc / double(c);
  return en;
}

DerivativeBaseline default_baseline(const EffectMeasure& m) {
  return m.name == "OR" ? DerivativeBaseline::Source : DerivativeBaseline::Target;
}

EstimateReport gamma_transported(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en) {
  double s1 = 0, s0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) != 0) continue;
    s1 += gamma_row(m, en.cate(i), en.mu0_t(i), i);
    s0 += en.mu0_t(i);
  }
  EstimateReport r;
  r.measure = m.name;
  r.estimator = "effect/tgamma";
  diagnostics(r, d, en);
  double psi1 = s1 / double(d.m()), psi0 = s0 / double(d.m());
  r.diagnostics["psi1"] = psi1;
  r.diagnostics["psi0"] = psi0;
  r.estimate = eval_phi(m, psi1, psi0);
  return r;
}

EstimateReport gamma_weighted(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en) {
  double s1 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) != 1) continue;
    s1 += en.ratio(i) * gamma_row(m, en.cate(i), en.mu0_t(i), i);
  }
  EstimateReport r;
  r.measure = m.name;
  r.estimator = "effect/wgamma";
  diagnostics(r, d, en);
  double psi1 = s1 / double(d.n());
  r.diagnostics["psi1"] = psi1;
  r.diagnostics["psi0"] = en.psi0_t;
  r.estimate = eval_phi(m, psi1, en.psi0_t);
  return r;
}

Eigen::VectorXd eif_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en, double psi1,
                           DerivativeBaseline base) {
  const double alpha = en.alpha_hat, pi = en.pi;
  Eigen::VectorXd phi(d.N());
  for (Index i = 0; i < d.N(); ++i) {
    const double tau = en.cate(i);
    if (d.s(i) == 0) {
      phi(i) = (gamma_row(m, tau, en.mu0_t(i), i) - psi1) / (1.0 - alpha);
      continue;
    }
    const double w = en.ratio(i) / alpha;
    if (d.a(i) == 1) {
      phi(i) = w * (d.y(i) - gamma_row(m, tau, en.mu0_s(i), i)) / pi;
    } else {
      double b = base == DerivativeBaseline::Target ? en.mu0_t(i) : en.mu0_s(i);
      double dg = at_row(i, [&] { return eval_dgamma_dpsi0(m, tau, b); });
      phi(i) = -w * (d.y(i) - en.mu0_s(i)) * dg / (1.0 - pi);
    }
  }
  return phi;
}

double ee_effect_psi1(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                      DerivativeBaseline base) {
  // phi is affine in psi1 with slope -(m / N) / (1 - alpha) summed over rows.
  Eigen::VectorXd phi = eif_effect(d, m, en, 0.0, base);
  const double slope = double(d.m()) / (1.0 - en.alpha_hat);
  return phi.sum() / slope;
}

EstimateReport ee_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en) {
  return ee_effect(d, m, en, default_baseline(m));
}

EstimateReport ee_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                         DerivativeBaseline base) {
  EstimateReport r;
  r.measure = m.name;
  r.estimator = "effect/ee";
  diagnostics(r, d, en);
  double psi1 = ee_effect_psi1(d, m, en, base);
  r.diagnostics["psi1"] = psi1;
  r.diagnostics["psi0"] = en.psi0_t;
  r.diagnostics["derivative_baseline"] = base == DerivativeBaseline::Target ? "target" : "source";
  r.estimate = eval_phi(m, psi1, en.psi0_t);
  return r;
}

EffectInitializer parse_effect_initializer(const std::string& s) {
  if (s == "tgamma" || s == "gamma_transported") return EffectInitializer::GammaTransported;
  if (s == "wgamma" || s == "gamma_weighted") return EffectInitializer::GammaWeighted;
  if (s == "ee") return EffectInitializer::EE;
  throw LookupError("unknown effect one-step initializer '" + s + "'; valid: tgamma, wgamma, ee");
}

const char* effect_initializer_name(EffectInitializer i) {
  switch (i) {
    case EffectInitializer::GammaTransported: return "tgamma";
    case EffectInitializer::GammaWeighted: return "wgamma";
    case EffectInitializer::EE: return "ee";
  }
  return "";
}

EstimateReport one_step_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                               EffectInitializer init) {
  return one_step_effect(d, m, en, init, default_baseline(m));
}

EstimateReport one_step_effect(const StudyData& d, const EffectMeasure& m, const EffectNuisance& en,
                               EffectInitializer init, DerivativeBaseline base) {
  double psi1 = 0;
  switch (init) {
    case EffectInitializer::GammaTransported: psi1 = gamma_transported(d, m, en).diagnostics["psi1"]; break;
    case EffectInitializer::GammaWeighted: psi1 = gamma_weighted(d, m, en).diagnostics["psi1"]; break;
    case EffectInitializer::EE: psi1 = ee_effect_psi1(d, m, en, base); break;
  }
  const double psi0 = en.psi0_t;
  Eigen::VectorXd phi = eif_effect(d, m, en, psi1, base);
  const double correction = phi.mean();
  EstimateReport r;
  r.measure = m.name;
  r.estimator = std::string("effect/os:") + effect_initializer_name(init);
  diagnostics(r, d, en);
  r.diagnostics["initializer"] = effect_initializer_name(init);
  r.diagnostics["psi1_init"] = psi1;
  r.diagnostics["psi0"] = psi0;
  r.diagnostics["correction"] = correction;
  r.estimate = eval_phi(m, psi1, psi0) + eval_dphi_d1(m, psi1, psi0) * correction;
  return r;
}

}  // namespace ct
