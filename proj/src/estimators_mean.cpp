#include "causal_transport/estimators_mean.hpp"

#include <cmath>
#include <memory>

#include "causal_transport/errors.hpp"

namespace ct {
namespace {

double ratio_self_normalization(const StudyData& d, const NuisanceValues& nv) {
  double acc = 0;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i) == 1) acc += nv.ratio(i);
  return acc / double(d.n());
}

void base_diagnostics(EstimateReport& r, const StudyData& d, const NuisanceValues& nv) {
  r.n = d.n();
  r.m = d.m();
  r.diagnostics["alpha_hat"] = d.alpha_hat();
  r.diagnostics["pi"] = d.pi;
  r.diagnostics["folds"] = nv.folds;
  if (nv.ratio.size() == d.N()) {
    r.diagnostics["ratio_mean_source"] = number_or_null(ratio_self_normalization(d, nv));
    r.diagnostics["ratio_clipped"] = nv.clipped;
  }
}

}  // namespace

double arm_probability(const StudyData& d, int a, Propensity mode) {
  if (mode == Propensity::Known) return a == 1 ? d.pi : 1.0 - d.pi;
  Index na = 0;
  for (Index i = 0; i < d.N(); ++i) na += (d.s(i) == 1 && d.a(i) == a);
  return double(na) / double(d.n());
}

ArmMeans wht_arm_means(const StudyData& d, const NuisanceValues& nv, Propensity mode) {
  const double p1 = arm_probability(d, 1, mode), p0 = arm_probability(d, 0, mode);
  double s1 = 0, s0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) != 1) continue;
    if (d.a(i) == 1)
      s1 += nv.ratio(i) * d.y(i) / p1;
    else
      s0 += nv.ratio(i) * d.y(i) / p0;
  }
  const double n = double(d.n());
  return {s1 / n, s0 / n, 0, 0, mode == Propensity::Known ? "wht" : "neyman"};
}

ArmMeans g_weighted_arm_means(const StudyData& d, const NuisanceValues& nv) {
  double s1 = 0, s0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) != 1) continue;
    s1 += nv.ratio(i) * nv.mu1(i);
    s0 += nv.ratio(i) * nv.mu0(i);
  }
  const double n = double(d.n());
  return {s1 / n, s0 / n, 0, 0, "wG"};
}

ArmMeans g_transported_arm_means(const StudyData& d, const NuisanceValues& nv) {
  double s1 = 0, s0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) != 0) continue;
    s1 += nv.mu1(i);
    s0 += nv.mu0(i);
  }
  const double m = double(d.m());
  return {s1 / m, s0 / m, 0, 0, "tG"};
}

ArmMeans ee_arm_means(const StudyData& d, const NuisanceValues& nv, Propensity mode) {
  const double p1 = arm_probability(d, 1, mode), p0 = arm_probability(d, 0, mode);
  double t1 = 0, t0 = 0, c1 = 0, c0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) == 0) {
      t1 += nv.mu1(i);
      t0 += nv.mu0(i);
    } else if (d.a(i) == 1) {
      c1 += nv.ratio(i) * (d.y(i) - nv.mu1(i)) / p1;
    } else {
      c0 += nv.ratio(i) * (d.y(i) - nv.mu0(i)) / p0;
    }
  }
  const double m = double(d.m()), n = double(d.n());
  ArmMeans am;
  am.correction1 = c1 / n;
  am.correction0 = c0 / n;
  am.psi1 = t1 / m + am.correction1;
  am.psi0 = t0 / m + am.correction0;
  am.method = "ee";
  return am;
}

EstimateReport plug_in_report(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv,
                              const ArmMeans& am, const std::string& estimator) {
  EstimateReport r;
  r.measure = m.name;
  r.estimator = estimator;
  base_diagnostics(r, d, nv);
  r.diagnostics["psi1"] = number_or_null(am.psi1);
  r.diagnostics["psi0"] = number_or_null(am.psi0);
  if (am.correction1 != 0 || am.correction0 != 0) {
    r.diagnostics["correction1"] = am.correction1;
    r.diagnostics["correction0"] = am.correction0;
  }
  r.estimate = eval_phi(m, am.psi1, am.psi0);
  return r;
}

EstimateReport wht(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv) {
  return plug_in_report(d, m, nv, wht_arm_means(d, nv, Propensity::Known), "wht");
}

EstimateReport neyman(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv) {
  auto r = plug_in_report(d, m, nv, wht_arm_means(d, nv, Propensity::Estimated), "neyman");
  r.diagnostics["pi_hat"] = arm_probability(d, 1, Propensity::Estimated);
  return r;
}

EstimateReport g_weighted(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv) {
  return plug_in_report(d, m, nv, g_weighted_arm_means(d, nv), "wG");
}

EstimateReport g_transported(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv) {
  return plug_in_report(d, m, nv, g_transported_arm_means(d, nv), "tG");
}

EstimateReport ee(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv, Propensity mode) {
  auto r = plug_in_report(d, m, nv, ee_arm_means(d, nv, mode), "ee");
  if (mode == Propensity::Estimated) r.diagnostics["propensity"] = "estimated";
  return r;
}

Initializer parse_initializer(const std::string& s) {
  if (s == "wht") return Initializer::Wht;
  if (s == "wG" || s == "g_weighted") return Initializer::GWeighted;
  if (s == "tG" || s == "g_transported") return Initializer::GTransported;
  if (s == "ee") return Initializer::EE;
  throw LookupError("unknown one-step initializer '" + s + "'; valid: wht, wG, tG, ee");
}

const char* initializer_name(Initializer i) {
  switch (i) {
    case Initializer::Wht: return "wht";
    case Initializer::GWeighted: return "wG";
    case Initializer::GTransported: return "tG";
    case Initializer::EE: return "ee";
  }
  return "";
}

ArmMeans initial_arm_means(const StudyData& d, const NuisanceValues& nv, Initializer init) {
  switch (init) {
    case Initializer::Wht: return wht_arm_means(d, nv);
    case Initializer::GWeighted: return g_weighted_arm_means(d, nv);
    case Initializer::GTransported: return g_transported_arm_means(d, nv);
    case Initializer::EE: return ee_arm_means(d, nv);
  }
  return {};
}

std::optional<double> one_step_closed_form(const EffectMeasure& m, const ArmMeans& init, const ArmMeans& eem,
                                           double c) {
  const double p1 = init.psi1, p0 = init.psi0;
  const double e1 = c * (eem.psi1 - p1), e0 = c * (eem.psi0 - p0);
  if (m.name == "RD") return (p1 - p0) + e1 - e0;
  if (m.name == "RR") {
    if (std::abs(p0) < 1e-12) throw DomainError("RR one-step: psi0 must be non-zero");
    return p1 / p0 + e1 / p0 - p1 / (p0 * p0) * e0;
  }
  if (m.name == "OR") {
    if (!m.domain(p1, p0)) throw DomainError(std::string("OR one-step: ") + m.phi_check(p1, p0));
    double o1 = p1 / (1 - p1), o0 = p0 / (1 - p0);
    return o1 / o0 + (1 - p0) / (p0 * (1 - p1) * (1 - p1)) * e1 - o1 / (p0 * p0) * e0;
  }
  return std::nullopt;
}

EstimateReport one_step_from(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv,
                             const ArmMeans& init, const std::string& init_name, Propensity mode) {
  EstimateReport r;
  r.measure = m.name;
  r.estimator = "os:" + init_name;
  base_diagnostics(r, d, nv);
  ArmMeans eem = ee_arm_means(d, nv, mode);
  const double c = double(d.m()) / (double(d.N()) * (1.0 - nv.alpha_hat));
  r.diagnostics["initializer"] = init_name;
  r.diagnostics["psi1_init"] = number_or_null(init.psi1);
  r.diagnostics["psi0_init"] = number_or_null(init.psi0);
  r.diagnostics["psi1_ee"] = number_or_null(eem.psi1);
  r.diagnostics["psi0_ee"] = number_or_null(eem.psi0);
  double base = eval_phi(m, init.psi1, init.psi0);
  if (auto cf = one_step_closed_form(m, init, eem, c)) {
    r.estimate = *cf;
    r.diagnostics["form"] = "closed";
  } else {
    double g1 = eval_dphi_d1(m, init.psi1, init.psi0), g0 = eval_dphi_d0(m, init.psi1, init.psi0);
    r.estimate = base + g1 * c * (eem.psi1 - init.psi1) + g0 * c * (eem.psi0 - init.psi0);
    r.diagnostics["form"] = "chain_rule";
  }
  r.diagnostics["initial_estimate"] = number_or_null(base);
  return r;
}

EstimateReport one_step(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv, Initializer init,
                        Propensity mode) {
  return one_step_from(d, m, nv, initial_arm_means(d, nv, init), initializer_name(init), mode);
}

Eigen::VectorXd eif_arm(const StudyData& d, const NuisanceValues& nv, int a, double psi_a, Propensity mode) {
  const double alpha = nv.alpha_hat, pa = arm_probability(d, a, mode);
  const Eigen::VectorXd& mu = a == 1 ? nv.mu1 : nv.mu0;
  Eigen::VectorXd phi(d.N());
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) == 0)
      phi(i) = (mu(i) - psi_a) / (1.0 - alpha);
    else
      phi(i) = d.a(i) == a ? nv.ratio(i) * (d.y(i) - mu(i)) / (alpha * pa) : 0.0;
  }
  return phi;
}

Eigen::VectorXd eif_mean(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv, double psi1,
                         double psi0, Propensity mode) {
  double g1 = eval_dphi_d1(m, psi1, psi0), g0 = eval_dphi_d0(m, psi1, psi0);
  return g1 * eif_arm(d, nv, 1, psi1, mode) + g0 * eif_arm(d, nv, 0, psi0, mode);
}

double variance_oracle_wht(const StudyData& d, const EffectMeasure& m, const NuisanceValues& nv) {
  ArmMeans am = wht_arm_means(d, nv);
  const double p1 = d.pi, p0 = 1.0 - d.pi, alpha = nv.alpha_hat;
  double e1 = 0, e0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) != 1) continue;
    double r2y2 = nv.ratio(i) * nv.ratio(i) * d.y(i) * d.y(i);
    if (d.a(i) == 1)
      e1 += r2y2 / p1;
    else
      e0 += r2y2 / p0;
  }
  e1 /= double(d.n());
  e0 /= double(d.n());
  double g1 = eval_dphi_d1(m, am.psi1, am.psi0), g0 = eval_dphi_d0(m, am.psi1, am.psi0);
  double lin = g1 * am.psi1 + g0 * am.psi0;
  double v = (g1 * g1 * e1 / p1 + g0 * g0 * e0 / p0 - lin * lin) / alpha;
  if (!std::isfinite(v)) throw DomainError(m.name + " oracle variance is not finite");
  return v;
}

namespace {

struct SystemData {
  Eigen::MatrixXd v;
  Eigen::VectorXi s, a;
  Eigen::VectorXd y;
  Link link = Link::Identity;
  double pi = 0.5;
  bool ratio = false, outcome = false, estimated_pi = false;
  int kind = 0;  // 0 wht/neyman, 1 wG, 2 tG, 3 ee
  Index i_alpha = -1, i_pi = -1, i_beta = -1, i_b0 = -1, i_b1 = -1, k = 0;
};

double inv_link(Link l, double eta) { return l == Link::Identity ? eta : sigmoid(eta); }

}  // namespace

EstimatingSystem build_system(const StudyData& d, const std::string& estimator, const NuisanceFit& nf,
                              Propensity mode) {
  auto sd = std::make_shared<SystemData>();
  if (estimator == "wht" || estimator == "neyman") {
    sd->kind = 0;
    sd->ratio = true;
    sd->estimated_pi = estimator == "neyman";
  } else if (estimator == "wG") {
    sd->kind = 1;
    sd->ratio = sd->outcome = true;
  } else if (estimator == "tG") {
    sd->kind = 2;
    sd->outcome = true;
  } else if (estimator == "ee") {
    sd->kind = 3;
    sd->ratio = sd->outcome = true;
    sd->estimated_pi = mode == Propensity::Estimated;
  } else {
    throw CapabilityError("sandwich variance is available for wht, neyman, wG, tG and ee, not '" + estimator +
                          "'");
  }
  if (sd->ratio && (!nf.selection || !nf.ratio.parametric()))
    throw CapabilityError("sandwich variance needs a logistic density-ratio model");
  if (sd->ratio && nf.ratio.clip > 0) throw CapabilityError("sandwich variance is unavailable with ratio clipping");
  if (sd->outcome && (!nf.mu_s.mu0.parametric() || !nf.mu_s.mu1.parametric()))
    throw CapabilityError("sandwich variance needs parametric outcome models");

  sd->v = design_matrix(d.x);
  sd->s = d.s;
  sd->a = d.a;
  sd->y = d.y;
  sd->pi = d.pi;
  sd->link = nf.mu_s.link;
  const Index q = sd->v.cols();
  std::vector<std::string> labels = {"psi0", "psi1"};
  Index k = 2;
  if (sd->ratio) {
    sd->i_alpha = k++;
    labels.push_back("alpha");
  }
  if (sd->estimated_pi) {
    sd->i_pi = k++;
    labels.push_back("pi1");
  }
  if (sd->ratio) {
    sd->i_beta = k;
    k += q;
    for (Index j = 0; j < q; ++j) labels.push_back("beta_sel" + std::to_string(j));
  }
  if (sd->outcome) {
    sd->i_b0 = k;
    k += q;
    sd->i_b1 = k;
    k += q;
    for (Index j = 0; j < q; ++j) labels.push_back("beta0_" + std::to_string(j));
    for (Index j = 0; j < q; ++j) labels.push_back("beta1_" + std::to_string(j));
  }
  sd->k = k;

  NuisanceValues nv = evaluate_nuisances(nf, d);
  ArmMeans am;
  switch (sd->kind) {
    case 0: am = wht_arm_means(d, nv, sd->estimated_pi ? Propensity::Estimated : Propensity::Known); break;
    case 1: am = g_weighted_arm_means(d, nv); break;
    case 2: am = g_transported_arm_means(d, nv); break;
    default: am = ee_arm_means(d, nv, mode); break;
  }
  EstimatingSystem sys;
  sys.rows = d.N();
  sys.labels = labels;
  sys.theta_hat.resize(k);
  sys.theta_hat(0) = am.psi0;
  sys.theta_hat(1) = am.psi1;
  if (sd->ratio) {
    sys.theta_hat(sd->i_alpha) = d.alpha_hat();
    sys.theta_hat.segment(sd->i_beta, q) = nf.selection->beta;
  }
  if (sd->estimated_pi) sys.theta_hat(sd->i_pi) = arm_probability(d, 1, Propensity::Estimated);
  if (sd->outcome) {
    sys.theta_hat.segment(sd->i_b0, q) = nf.mu_s.mu0.beta;
    sys.theta_hat.segment(sd->i_b1, q) = nf.mu_s.mu1.beta;
  }

  sys.lambda = [sd, q](Index i, const Eigen::VectorXd& th, Eigen::Ref<Eigen::VectorXd> out) {
    const auto vi = sd->v.row(i);
    const bool src = sd->s(i) == 1;
    const double psi[2] = {th(0), th(1)};
    double mu[2] = {0, 0};
    if (sd->outcome) {
      mu[0] = inv_link(sd->link, vi.dot(th.segment(sd->i_b0, q)));
      mu[1] = inv_link(sd->link, vi.dot(th.segment(sd->i_b1, q)));
    }
    double odds_t = 0, alpha = 0;
    if (sd->ratio) {
      alpha = th(sd->i_alpha);
      double sg = sigmoid(vi.dot(th.segment(sd->i_beta, q)));
      odds_t = (1.0 - sg) / sg;
      out(sd->i_alpha) = double(sd->s(i)) - alpha;
      out.segment(sd->i_beta, q) = vi.transpose() * (double(sd->s(i)) - sg);
    }
    double pa[2] = {1.0 - sd->pi, sd->pi};
    if (sd->estimated_pi) {
      double p1 = th(sd->i_pi);
      pa[0] = 1.0 - p1;
      pa[1] = p1;
      out(sd->i_pi) = src ? double(sd->a(i)) - p1 : 0.0;
    }
    for (int arm = 0; arm <= 1; ++arm) {
      double val = 0;
      const bool in_arm = src && sd->a(i) == arm;
      switch (sd->kind) {
        case 0: val = (in_arm ? odds_t * sd->y(i) / pa[arm] / (1.0 - alpha) : 0.0) - psi[arm]; break;
        case 1: val = (src ? odds_t * mu[arm] / (1.0 - alpha) : 0.0) - psi[arm]; break;
        case 2: val = src ? 0.0 : mu[arm] - psi[arm]; break;
        default:
          val = src ? (in_arm ? odds_t * (sd->y(i) - mu[arm]) / (pa[arm] * (1.0 - alpha)) : 0.0)
                    : (mu[arm] - psi[arm]) / (1.0 - alpha);
      }
      out(arm) = val;
      if (sd->outcome) {
        Index off = arm == 0 ? sd->i_b0 : sd->i_b1;
        out.segment(off, q) =
            in_arm ? Eigen::VectorXd(vi.transpose() * (sd->y(i) - mu[arm])) : Eigen::VectorXd::Zero(q);
      }
    }
  };
  return sys;
}

double variance_sandwich(const StudyData& d, const std::string& estimator, const EffectMeasure& m,
                         const NuisanceFit& nf, Propensity mode) {
  EstimatingSystem sys = build_system(d, estimator, nf, mode);
  SandwichResult res = sandwich(sys);
  const double psi0 = sys.theta_hat(0), psi1 = sys.theta_hat(1);
  Eigen::Vector2d g(eval_dphi_d0(m, psi1, psi0), eval_dphi_d1(m, psi1, psi0));
  return double(d.N()) * delta_method(res.cov.topLeftCorner(2, 2), g);
}

}  // namespace ct
