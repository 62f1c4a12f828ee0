#include <random>

#include "causal_transport/errors.hpp"
#include "causal_transport/estimators_effect.hpp"
#include "causal_transport/pipeline.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace ct;

namespace {

// Binary outcomes, logistic surfaces, shifted covariates; half the target rows carry Y(0).
StudyData binary_data(Index N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  std::bernoulli_distribution sel(0.4), coin(0.5);
  Eigen::VectorXi s(N), a(N);
  Eigen::VectorXd y(N);
  Eigen::MatrixXd x(N, 2);
  for (Index i = 0; i < N; ++i) {
    s(i) = sel(rng);
    x(i, 0) = g(rng) + (s(i) ? 0 : 0.4);
    x(i, 1) = g(rng);
    if (s(i)) {
      a(i) = coin(rng);
      double eta = -0.3 + 0.5 * x(i, 0) - 0.4 * x(i, 1) + a(i) * (0.8 + 0.3 * x(i, 1));
      y(i) = u(rng) < sigmoid(eta) ? 1.0 : 0.0;
    } else if (coin(rng)) {
      a(i) = 0;
      y(i) = u(rng) < sigmoid(-0.1 + 0.4 * x(i, 0) - 0.4 * x(i, 1)) ? 1.0 : 0.0;
    } else {
      a(i) = -1, y(i) = std::nan("");
    }
  }
  return StudyData::create(s, x, a, y);
}

EffectNuisance nuisance_for(const StudyData& d, const EffectMeasure& m) {
  return effect_nuisance(d, m, evaluate_nuisances(fit_nuisances(d), d));
}

}  // namespace

TEST_CASE("identification under effect exchangeability on a discrete population") {
  oracle::Discrete pop;
  auto d = pop.data();
  PipelineOptions opt;
  opt.sandwich = false;
  for (const char* name : {"RD", "RR", "OR"}) {
    CAPTURE(name);
    double t = pop.effect_transport(name), w = pop.effect_weight(name);
    CHECK(std::abs(t - w) < 1e-12);
    double tau = oracle::phi(name, t, pop.psi0_target());
    CHECK(std::abs(tau - pop.closed_form(name)) < 1e-12);
    for (const auto& r :
         estimate_all(d, {"effect/tgamma", "effect/wgamma", "effect/ee", "effect/os:tgamma", "effect/os:ee"},
                      {name}, opt)) {
      CAPTURE(r.estimator);
      REQUIRE(r.ok());
      CHECK(std::abs(r.estimate - tau) < 1e-10);
    }
  }
}

TEST_CASE("null CATE gives the null effect") {
  oracle::Discrete pop;
  pop.mu1 = pop.mu0;
  auto d = pop.data();
  for (const char* name : {"RD", "RR", "OR"}) {
    const auto& m = get_measure(name);
    auto en = nuisance_for(d, m);
    CHECK(gamma_transported(d, m, en).estimate == doctest::Approx(*m.null_value).scale(1.0).epsilon(1e-12));
    CHECK(gamma_weighted(d, m, en).estimate == doctest::Approx(*m.null_value).scale(1.0).epsilon(1e-10));
  }
}

TEST_CASE("RD transported Gamma-formula is the mean target CATE") {
  auto d = binary_data(3000, 1);
  const auto& m = get_measure("RD");
  auto en = nuisance_for(d, m);
  double acc = 0;
  for (Index i = 0; i < d.N(); ++i)
    if (!d.s(i)) acc += en.cate(i);
  CHECK(gamma_transported(d, m, en).estimate == doctest::Approx(acc / double(d.m())).epsilon(1e-12));
}

TEST_CASE("estimating equation matches hand-expanded RD, RR and OR forms") {
  auto d = binary_data(4000, 2);
  const double pi = d.pi;
  for (const char* name : {"RD", "RR", "OR"}) {
    CAPTURE(name);
    const auto& m = get_measure(name);
    auto en = nuisance_for(d, m);
    double target = 0, source = 0;
    for (Index i = 0; i < d.N(); ++i) {
      const double tau = en.cate(i), m0t = en.mu0_t(i), m0s = en.mu0_s(i);
      if (!d.s(i)) {
        target += oracle::gamma(name, tau, m0t);
        continue;
      }
      const double y = d.y(i), r = en.ratio(i), a = d.a(i);
      double treated = 0, control = 0;
      if (std::string(name) == "RD") {
        treated = y - tau - m0s;
        control = y - m0s;
      } else if (std::string(name) == "RR") {
        treated = y - m0s * tau;
        control = (y - m0s) * tau;
      } else {
        double den = 1 - m0s + m0s * tau;
        treated = y - m0s * tau / den;
        control = (y - m0s) * tau / (den * den);
      }
      source += r * (a / pi * treated - (1 - a) / (1 - pi) * control);
    }
    double psi1 = target / double(d.m()) + source / double(d.n());
    CHECK(ee_effect_psi1(d, m, en, default_baseline(m)) == doctest::Approx(psi1).epsilon(1e-12));
    CHECK(ee_effect(d, m, en).estimate == doctest::Approx(oracle::phi(name, psi1, en.psi0_t)).epsilon(1e-12));
  }
}

TEST_CASE("EE zero property and one-step identities") {
  auto d = binary_data(3000, 3);
  for (const char* name : {"RD", "RR", "OR", "ERR", "logOR"}) {
    CAPTURE(name);
    const auto& m = get_measure(name);
    auto en = nuisance_for(d, m);
    for (auto base : {DerivativeBaseline::Target, DerivativeBaseline::Source}) {
      double psi1 = ee_effect_psi1(d, m, en, base);
      CHECK(std::abs(eif_effect(d, m, en, psi1, base).mean()) < 1e-10);
    }
    double e = ee_effect(d, m, en).estimate;
    CHECK(std::abs(one_step_effect(d, m, en, EffectInitializer::EE).estimate - e) < 1e-12);
  }
  const auto& rd = get_measure("RD");
  auto en = nuisance_for(d, rd);
  double e = ee_effect(d, rd, en).estimate;
  for (auto init : {EffectInitializer::GammaTransported, EffectInitializer::GammaWeighted})
    CHECK(std::abs(one_step_effect(d, rd, en, init).estimate - e) < 1e-12);
}

TEST_CASE("exact nuisances with noiseless outcomes") {
  auto d = binary_data(1000, 4);
  const auto& m = get_measure("OR");
  auto en = nuisance_for(d, m);
  en.mu0_s = en.mu0_t;
  Eigen::VectorXd y = d.y;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i)) y(i) = d.a(i) ? oracle::gamma("OR", en.cate(i), en.mu0_s(i)) : en.mu0_s(i);
  auto exact = StudyData::create(d.s, d.x, d.a, y);
  auto phi = eif_effect(exact, m, en, 0.3, DerivativeBaseline::Target);
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i)) CHECK(std::abs(phi(i)) < 1e-14);
  CHECK(ee_effect(exact, m, en).diagnostics["psi1"].get<double>() ==
        doctest::Approx(gamma_transported(exact, m, en).diagnostics["psi1"].get<double>()).epsilon(1e-12));
}

TEST_CASE("effect estimators need target controls") {
  oracle::Discrete pop;
  auto d = pop.data();
  Eigen::VectorXi a = d.a;
  Eigen::VectorXd y = d.y;
  for (Index i = 0; i < d.N(); ++i)
    if (!d.s(i)) a(i) = -1, y(i) = std::nan("");
  auto none = StudyData::create(d.s, d.x, a, y);
  auto nv = evaluate_nuisances(fit_nuisances(none), none);
  CHECK_THROWS_AS(effect_nuisance(none, get_measure("RD"), nv), CapabilityError);
  CHECK(default_baseline(get_measure("OR")) == DerivativeBaseline::Source);
  CHECK(default_baseline(get_measure("RR")) == DerivativeBaseline::Target);
}
