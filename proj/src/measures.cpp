#include "causal_transport/measures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "causal_transport/errors.hpp"

namespace ct {
namespace {

constexpr double kEps = 1e-12;

bool near(double a, double b) { return std::abs(a - b) < kEps; }
double odds(double p) { return p / (1.0 - p); }

const char* ok(double, double) { return nullptr; }

const char* psi0_nonzero(double, double psi0) {
  return near(psi0, 0.0) ? "psi0 must be non-zero" : nullptr;
}
const char* psi0_not_one(double, double psi0) {
  return near(psi0, 1.0) ? "psi0 must differ from 1" : nullptr;
}

const char* odds_pair(double psi1, double psi0) {
  if (near(psi0, 0.0) || near(psi0, 1.0)) return "psi0 must lie outside {0, 1}";
  if (near(psi1, 1.0)) return "psi1 must differ from 1";
  return nullptr;
}
const char* log_odds_pair(double psi1, double psi0) {
  if (auto e = odds_pair(psi1, psi0)) return e;
  if (!(odds(psi1) / odds(psi0) > 0.0)) return "odds ratio must be positive";
  return nullptr;
}
const char* log_odds_pair_d(double psi1, double psi0) {
  if (auto e = log_odds_pair(psi1, psi0)) return e;
  if (near(psi1, 0.0)) return "psi1 must be non-zero";
  return nullptr;
}

// Gamma admissibility: (tau, psi0)
const char* or_gamma(double tau, double psi0) {
  if (near(psi0, 0.0) || near(psi0, 1.0)) return "psi0 must lie outside {0, 1}";
  if (near(1.0 + tau * psi0 - psi0, 0.0)) return "1 + tau*psi0 - psi0 must be non-zero";
  return nullptr;
}
const char* logor_gamma(double tau, double psi0) {
  if (near(psi0, 0.0) || near(psi0, 1.0)) return "psi0 must lie outside {0, 1}";
  if (near(1.0 - psi0 + std::exp(tau) * psi0, 0.0)) return "1 - psi0 + exp(tau)*psi0 must be non-zero";
  return nullptr;
}
const char* oddsprod_gamma(double tau, double psi0) {
  if (near(psi0, 0.0) || near(psi0, 1.0)) return "psi0 must lie outside {0, 1}";
  if (near(odds(psi0) + tau, 0.0)) return "odds(psi0) + tau must be non-zero";
  return nullptr;
}

const char* nnt_phi(double psi1, double psi0) {
  return std::abs(psi1 - psi0) < kEps ? "psi1 and psi0 must differ (NNT diverges at no effect)" : nullptr;
}
const char* nnt_gamma(double tau, double) {
  return std::abs(tau) < kEps ? "tau must be non-zero" : nullptr;
}

const char* grrr_phi(double, double psi0) {
  if (!(psi0 > 0.0 && psi0 < 1.0)) return "psi0 must lie in (0, 1)";
  return nullptr;
}
const char* grrr_dphi(double psi1, double psi0) {
  if (auto e = grrr_phi(psi1, psi0)) return e;
  if (psi1 == psi0) return "derivative undefined at psi1 = psi0";
  return nullptr;
}
const char* grrr_gamma(double, double psi0) {
  if (!(psi0 > 0.0 && psi0 < 1.0)) return "psi0 must lie in (0, 1)";
  return nullptr;
}
const char* grrr_dgamma(double tau, double psi0) {
  if (auto e = grrr_gamma(tau, psi0)) return e;
  if (tau == 0.0) return "derivative undefined at tau = 0";
  return nullptr;
}

const char* rs_phi(double psi1, double psi0) {
  if (near(psi0, 1.0)) return "psi0 must differ from 1";
  if (near(psi1, 1.0)) return "psi1 must differ from 1";
  return nullptr;
}
const char* rs_gamma(double tau, double psi0) {
  if (near(psi0, 1.0)) return "psi0 must differ from 1";
  if (std::abs(tau) < kEps) return "tau must be non-zero";
  return nullptr;
}

const char* asin_phi(double psi1, double psi0) {
  if (!(psi1 >= 0.0 && psi1 <= 1.0)) return "psi1 must lie in [0, 1]";
  if (!(psi0 >= 0.0 && psi0 <= 1.0)) return "psi0 must lie in [0, 1]";
  return nullptr;
}
const char* asin_dphi(double psi1, double psi0) {
  if (!(psi1 > 0.0 && psi1 < 1.0)) return "psi1 must lie in (0, 1)";
  if (!(psi0 > 0.0 && psi0 < 1.0)) return "psi0 must lie in (0, 1)";
  return nullptr;
}
const char* asin_gamma(double tau, double psi0) {
  if (!(psi0 >= 0.0 && psi0 <= 1.0)) return "psi0 must lie in [0, 1]";
  double u = tau + std::asin(std::sqrt(psi0));
  if (u < 0.0 || u > M_PI / 2) return "tau + asin(sqrt(psi0)) must lie in [0, pi/2]";
  return nullptr;
}
const char* asin_dgamma(double tau, double psi0) {
  if (!(psi0 > 0.0 && psi0 < 1.0)) return "psi0 must lie in (0, 1)";
  return asin_gamma(tau, psi0);
}

double grrr_phi_f(double p1, double p0) {
  if (p1 > p0) return 1.0 - (1.0 - p1) / (1.0 - p0);
  if (p1 < p0) return -1.0 + p1 / p0;
  return 0.0;
}
double grrr_gamma_f(double t, double p0) {
  if (t > 0) return 1.0 - (1.0 - t) * (1.0 - p0);
  if (t < 0) return p0 * (1.0 + t);
  return p0;
}

std::vector<EffectMeasure> build() {
  std::vector<EffectMeasure> v;
  v.push_back({"RD",
               [](double a, double b) { return a - b; },
               [](double t, double b) { return b + t; },
               [](double, double) { return 1.0; },
               [](double, double) { return -1.0; },
               [](double, double) { return 1.0; },
               [](double, double) { return 1.0; },
               ok, ok, ok, ok, 0.0});
  v.push_back({"RR",
               [](double a, double b) { return a / b; },
               [](double t, double b) { return t * b; },
               [](double, double b) { return 1.0 / b; },
               [](double a, double b) { return -a / (b * b); },
               [](double, double b) { return b; },
               [](double t, double) { return t; },
               psi0_nonzero, psi0_nonzero, ok, ok, 1.0});
  v.push_back({"OR",
               [](double a, double b) { return odds(a) / odds(b); },
               [](double t, double b) { return t * b / (1.0 + t * b - b); },
               [](double a, double b) { return (1.0 - b) / (b * (1.0 - a) * (1.0 - a)); },
               [](double a, double b) { return -odds(a) / (b * b); },
               [](double t, double b) {
                 double d = 1.0 + t * b - b;
                 return b * (1.0 - b) / (d * d);
               },
               [](double t, double b) {
                 double d = 1.0 + t * b - b;
                 return t / (d * d);
               },
               odds_pair, odds_pair, or_gamma, or_gamma, 1.0});
  v.push_back({"NNT",
               [](double a, double b) { return 1.0 / (a - b); },
               [](double t, double b) { return 1.0 / t + b; },
               [](double a, double b) { return -1.0 / ((a - b) * (a - b)); },
               [](double a, double b) { return 1.0 / ((a - b) * (a - b)); },
               [](double t, double) { return -1.0 / (t * t); },
               [](double, double) { return 1.0; },
               nnt_phi, nnt_phi, nnt_gamma, nnt_gamma, std::nullopt});
  v.push_back({"GRRR",
               grrr_phi_f,
               grrr_gamma_f,
               [](double a, double b) { return a > b ? 1.0 / (1.0 - b) : 1.0 / b; },
               [](double a, double b) {
                 return a > b ? -(1.0 - a) / ((1.0 - b) * (1.0 - b)) : -a / (b * b);
               },
               [](double t, double b) { return t > 0 ? 1.0 - b : b; },
               [](double t, double) { return t > 0 ? 1.0 - t : 1.0 + t; },
               grrr_phi, grrr_dphi, grrr_gamma, grrr_dgamma, 0.0});
  v.push_back({"ERR",
               [](double a, double b) { return (a - b) / b; },
               [](double t, double b) { return b * (1.0 + t); },
               [](double, double b) { return 1.0 / b; },
               [](double a, double b) { return -a / (b * b); },
               [](double, double b) { return b; },
               [](double t, double) { return 1.0 + t; },
               psi0_nonzero, psi0_nonzero, ok, ok, 0.0});
  v.push_back({"SR",
               [](double a, double b) { return (1.0 - a) / (1.0 - b); },
               [](double t, double b) { return 1.0 - t * (1.0 - b); },
               [](double, double b) { return -1.0 / (1.0 - b); },
               [](double a, double b) { return (1.0 - a) / ((1.0 - b) * (1.0 - b)); },
               [](double, double b) { return -(1.0 - b); },
               [](double t, double) { return t; },
               psi0_not_one, psi0_not_one, ok, ok, 1.0});
  v.push_back({"RS",
               [](double a, double b) { return (1.0 - b) / (1.0 - a); },
               [](double t, double b) { return 1.0 - (1.0 - b) / t; },
               [](double a, double b) { return (1.0 - b) / ((1.0 - a) * (1.0 - a)); },
               [](double a, double) { return -1.0 / (1.0 - a); },
               [](double t, double b) { return (1.0 - b) / (t * t); },
               [](double t, double) { return 1.0 / t; },
               rs_phi, rs_phi, rs_gamma, rs_gamma, 1.0});
  v.push_back({"logOR",
               [](double a, double b) { return std::log(odds(a) / odds(b)); },
               [](double t, double b) {
                 double e = std::exp(t);
                 return e * b / (1.0 - b + e * b);
               },
               [](double a, double) { return 1.0 / (a * (1.0 - a)); },
               [](double, double b) { return -1.0 / (b * (1.0 - b)); },
               [](double t, double b) {
                 double e = std::exp(t), d = 1.0 - b + e * b;
                 return e * b * (1.0 - b) / (d * d);
               },
               [](double t, double b) {
                 double e = std::exp(t), d = 1.0 - b + e * b;
                 return e / (d * d);
               },
               log_odds_pair, log_odds_pair_d, logor_gamma, logor_gamma, 0.0});
  v.push_back({"OddsProduct",
               [](double a, double b) { return odds(a) * odds(b); },
               [](double t, double b) { return t / (odds(b) + t); },
               [](double a, double b) { return odds(b) / ((1.0 - a) * (1.0 - a)); },
               [](double a, double b) { return odds(a) / ((1.0 - b) * (1.0 - b)); },
               [](double t, double b) {
                 double o = odds(b);
                 return o / ((o + t) * (o + t));
               },
               [](double t, double b) {
                 double o = odds(b);
                 return -t / ((o + t) * (o + t) * (1.0 - b) * (1.0 - b));
               },
               odds_pair, odds_pair, oddsprod_gamma, oddsprod_gamma, std::nullopt});
  v.push_back({"ArcsineDiff",
               [](double a, double b) { return std::asin(std::sqrt(a)) - std::asin(std::sqrt(b)); },
               [](double t, double b) {
                 double s = std::sin(t + std::asin(std::sqrt(b)));
                 return s * s;
               },
               [](double a, double) { return 0.5 / std::sqrt(a * (1.0 - a)); },
               [](double, double b) { return -0.5 / std::sqrt(b * (1.0 - b)); },
               [](double t, double b) { return std::sin(2.0 * (t + std::asin(std::sqrt(b)))); },
               [](double t, double b) {
                 return std::sin(2.0 * (t + std::asin(std::sqrt(b)))) * 0.5 / std::sqrt(b * (1.0 - b));
               },
               asin_phi, asin_dphi, asin_gamma, asin_dgamma, 0.0});
  v.push_back({"RRR",
               [](double a, double b) { return 1.0 - a / b; },
               [](double t, double b) { return b * (1.0 - t); },
               [](double, double b) { return -1.0 / b; },
               [](double a, double b) { return a / (b * b); },
               [](double, double b) { return -b; },
               [](double t, double) { return 1.0 - t; },
               psi0_nonzero, psi0_nonzero, ok, ok, 0.0});
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void domain_fail(const EffectMeasure& m, const char* what, const char* why, double a, double b,
                              const char* an, const char* bn) {
  throw DomainError(m.name + " " + what + ": " + why + " (" + an + "=" + std::to_string(a) + ", " + bn + "=" +
                    std::to_string(b) + ")");
}

double finite_or_throw(const EffectMeasure& m, const char* what, double v, double a, double b) {
  if (!std::isfinite(v)) domain_fail(m, what, "non-finite result", a, b, "arg1", "arg2");
  return v;
}

}  // namespace

const std::vector<EffectMeasure>& all_measures() {
  static const std::vector<EffectMeasure> registry = build();
  return registry;
}

std::vector<std::string> measure_names() {
  std::vector<std::string> out;
  for (const auto& m : all_measures()) out.push_back(m.name);
  return out;
}

const EffectMeasure& get_measure(std::string_view name) {
  std::string key = lower(name);
  for (const auto& m : all_measures())
    if (lower(m.name) == key) return m;
  std::string valid;
  for (const auto& m : all_measures()) valid += (valid.empty() ? "" : ", ") + m.name;
  throw LookupError("unknown measure '" + std::string(name) + "'; valid identifiers: " + valid);
}

double eval_phi(const EffectMeasure& m, double psi1, double psi0) {
  if (auto e = m.phi_check(psi1, psi0)) domain_fail(m, "phi", e, psi1, psi0, "psi1", "psi0");
  return finite_or_throw(m, "phi", m.phi(psi1, psi0), psi1, psi0);
}

double eval_gamma(const EffectMeasure& m, double tau, double psi0) {
  if (auto e = m.gamma_check(tau, psi0)) domain_fail(m, "gamma", e, tau, psi0, "tau", "psi0");
  return finite_or_throw(m, "gamma", m.gamma(tau, psi0), tau, psi0);
}

double eval_dphi_d1(const EffectMeasure& m, double psi1, double psi0) {
  if (auto e = m.dphi_check(psi1, psi0)) domain_fail(m, "d phi/d psi1", e, psi1, psi0, "psi1", "psi0");
  return finite_or_throw(m, "d phi/d psi1", m.dphi_d1(psi1, psi0), psi1, psi0);
}

double eval_dphi_d0(const EffectMeasure& m, double psi1, double psi0) {
  if (auto e = m.dphi_check(psi1, psi0)) domain_fail(m, "d phi/d psi0", e, psi1, psi0, "psi1", "psi0");
  return finite_or_throw(m, "d phi/d psi0", m.dphi_d0(psi1, psi0), psi1, psi0);
}

double eval_dgamma_dtau(const EffectMeasure& m, double tau, double psi0) {
  if (auto e = m.dgamma_check(tau, psi0)) domain_fail(m, "d gamma/d tau", e, tau, psi0, "tau", "psi0");
  return finite_or_throw(m, "d gamma/d tau", m.dgamma_dtau(tau, psi0), tau, psi0);
}

double eval_dgamma_dpsi0(const EffectMeasure& m, double tau, double psi0) {
  if (auto e = m.dgamma_check(tau, psi0)) domain_fail(m, "d gamma/d psi0", e, tau, psi0, "tau", "psi0");
  return finite_or_throw(m, "d gamma/d psi0", m.dgamma_dpsi0(tau, psi0), tau, psi0);
}

bool sample_domain_point(const EffectMeasure& m, double u1, double u0, double& psi1, double& psi0) {
  psi1 = 0.02 + 0.96 * u1;
  psi0 = 0.02 + 0.96 * u0;
  if ((m.name == "NNT" || m.name == "GRRR") && std::abs(psi1 - psi0) < 0.02) return false;
  if (!m.domain(psi1, psi0) || m.dphi_check(psi1, psi0)) return false;
  double tau = m.phi(psi1, psi0);
  return m.gamma_domain(tau, psi0) && m.dgamma_check(tau, psi0) == nullptr;
}

MeasureCheck self_test(const EffectMeasure& m, int points, unsigned long long seed) {
  MeasureCheck out;
  out.name = m.name;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto rel = [](double analytic, double fd) {
    return std::abs(analytic - fd) / std::max(std::abs(analytic), 1e-6);
  };
  const double h = 1e-6;
  while (out.points < points) {
    double p1, p0;
    if (!sample_domain_point(m, unif(rng), unif(rng), p1, p0)) continue;
    ++out.points;
    double tau = eval_phi(m, p1, p0);
    out.max_roundtrip_error = std::max(out.max_roundtrip_error, std::abs(eval_gamma(m, tau, p0) - p1));

    double d1 = eval_dphi_d1(m, p1, p0), d0 = eval_dphi_d0(m, p1, p0);
    double gt = eval_dgamma_dtau(m, tau, p0), g0 = eval_dgamma_dpsi0(m, tau, p0);
    double fd1 = (m.phi(p1 + h, p0) - m.phi(p1 - h, p0)) / (2 * h);
    double fd0 = (m.phi(p1, p0 + h) - m.phi(p1, p0 - h)) / (2 * h);
    double fdt = (m.gamma(tau + h, p0) - m.gamma(tau - h, p0)) / (2 * h);
    double fdg = (m.gamma(tau, p0 + h) - m.gamma(tau, p0 - h)) / (2 * h);
    out.max_derivative_rel_error =
        std::max({out.max_derivative_rel_error, rel(d1, fd1), rel(d0, fd0), rel(gt, fdt), rel(g0, fdg)});

    double c1 = std::abs(d1 * gt - 1.0);
    double c0 = std::abs(d0 * gt + g0) / std::max(1.0, std::abs(g0));
    out.max_chain_rule_error = std::max({out.max_chain_rule_error, c1, c0});
  }
  out.passed = out.max_roundtrip_error < 1e-10 && out.max_derivative_rel_error < 1e-4 &&
               out.max_chain_rule_error < 1e-8;
  return out;
}

}  // namespace ct
