#include <algorithm>
#include <random>

#include "causal_transport/errors.hpp"
#include "causal_transport/estimators_mean.hpp"
#include "causal_transport/pipeline.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace ct;

namespace {

// Four source rows (two per arm) and two target rows.
struct SixRows {
  StudyData d = oracle::make_data({1, 1, 1, 1, 0, 0}, {{0}, {1}, {2}, {3}, {4}, {5}},
                                  {1, 1, 0, 0, -1, -1}, {1, 0, 1, 0, oracle::nan(), oracle::nan()});
  NuisanceValues nv;
  SixRows() {
    nv.ratio = Eigen::VectorXd(6);
    nv.ratio << 1, 1, 1, 1, oracle::nan(), oracle::nan();
    nv.mu1 = Eigen::VectorXd(6);
    nv.mu1 << 0.8, 0.6, 0.7, 0.5, 0.9, 0.4;
    nv.mu0 = Eigen::VectorXd(6);
    nv.mu0 << 0.3, 0.2, 0.4, 0.1, 0.5, 0.2;
    nv.alpha_hat = 4.0 / 6.0;
    nv.pi = 0.5;
  }
};

// Continuous outcome data with a covariate shift and a nonlinear truth.
StudyData shifted_data(Index N, std::uint64_t seed, bool balanced = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::bernoulli_distribution sel(0.4), coin(0.5);
  Eigen::VectorXi s(N), a(N);
  Eigen::VectorXd y(N);
  Eigen::MatrixXd x(N, 2);
  int flip = 0;
  for (Index i = 0; i < N; ++i) {
    s(i) = sel(rng);
    x(i, 0) = g(rng) + (s(i) ? 0 : 0.5);
    x(i, 1) = g(rng);
    if (s(i)) {
      a(i) = balanced ? (flip++ % 2) : int(coin(rng));
      y(i) = 1 + x(i, 0) + 0.5 * x(i, 1) * x(i, 1) + a(i) * (1 + 0.3 * x(i, 0)) + g(rng);
    } else {
      a(i) = -1, y(i) = std::nan("");
    }
  }
  return StudyData::create(s, x, a, y);
}

NuisanceValues fitted(const StudyData& d, const NuisanceOptions& opt = {}) {
  return evaluate_nuisances(fit_nuisances(d, opt), d);
}

}  // namespace

TEST_CASE("influence function on the six-row fixture") {
  SixRows f;
  const double psi1 = 0.6, psi0 = 0.3;
  // Hand calculation: source residuals scaled by 1/(alpha pi) = 3, target terms by 1/(1 - alpha) = 3.
  Eigen::VectorXd phi1(6), phi0(6), rd(6);
  phi1 << 0.6, -1.8, 0, 0, 0.9, -0.6;
  phi0 << 0, 0, 1.8, -0.3, 0.6, -0.3;
  rd << 0.6, -1.8, -1.8, 0.3, 0.3, -0.3;
  CHECK((eif_arm(f.d, f.nv, 1, psi1) - phi1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((eif_arm(f.d, f.nv, 0, psi0) - phi0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((eif_mean(f.d, get_measure("RD"), f.nv, psi1, psi0) - rd).cwiseAbs().maxCoeff() < 1e-12);

  auto am = ee_arm_means(f.d, f.nv);
  CHECK(am.psi1 == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(am.psi0 == doctest::Approx(0.35 + 0.25 * (1.2 - 0.2)).epsilon(1e-12));
  CHECK(std::abs(eif_arm(f.d, f.nv, 1, am.psi1).mean()) < 1e-12);
}

TEST_CASE("constant means make target rows contribute nothing") {
  SixRows f;
  f.nv.mu1.setConstant(0.5);
  f.nv.mu0.setConstant(0.25);
  auto phi = eif_arm(f.d, f.nv, 1, 0.5);
  CHECK(phi(4) == 0.0);
  CHECK(phi(5) == 0.0);
}

TEST_CASE("weighted Horvitz-Thompson") {
  auto d = shifted_data(400, 3, true);
  Eigen::VectorXd yc = d.y;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i)) yc(i) = 2.5;
  auto dc = StudyData::create(d.s, d.x, d.a, yc);
  NuisanceOptions one;
  one.ratio_override = DensityRatio::constant(1.0);
  CHECK(wht(dc, get_measure("RD"), fitted(dc, one)).estimate == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  auto nv = fitted(d, one);
  double s1 = 0, s0 = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (!d.s(i)) continue;
    if (d.a(i) == 1)
      s1 += 1.0 * d.y(i) / 0.5;
    else
      s0 += 1.0 * d.y(i) / 0.5;
  }
  auto r = wht(d, get_measure("RD"), nv);
  CHECK(r.estimate == s1 / double(d.n()) - s0 / double(d.n()));
  CHECK(r.diagnostics["psi1"].get<double>() == s1 / double(d.n()));
}

TEST_CASE("Neyman variant") {
  auto d = shifted_data(400, 4);
  auto nv = fitted(d);
  auto dp = d;
  dp.pi = arm_probability(d, 1, Propensity::Estimated);
  CHECK(neyman(d, get_measure("RD"), nv).estimate ==
        doctest::Approx(wht(dp, get_measure("RD"), nv).estimate).epsilon(1e-12));

  auto u = shifted_data(500, 5);
  Eigen::VectorXd ones = u.y;
  for (Index i = 0; i < u.N(); ++i)
    if (u.s(i)) ones(i) = 1.0;
  auto d1 = StudyData::create(u.s, u.x, u.a, ones);
  NuisanceOptions lin;
  lin.link = LinkChoice::Identity;
  auto nv1 = fitted(d1, lin);
  double r1 = 0, r0 = 0, n1 = 0, n0 = 0;
  for (Index i = 0; i < d1.N(); ++i) {
    if (!d1.s(i)) continue;
    (d1.a(i) ? r1 : r0) += nv1.ratio(i);
    (d1.a(i) ? n1 : n0) += 1;
  }
  auto am = wht_arm_means(d1, nv1, Propensity::Estimated);
  CHECK(am.psi1 == doctest::Approx(r1 / n1).epsilon(1e-12));
  CHECK(am.psi0 == doctest::Approx(r0 / n0).epsilon(1e-12));
  CHECK(neyman(d1, get_measure("RD"), nv1).estimate == doctest::Approx(r1 / n1 - r0 / n0).epsilon(1e-12));
}

TEST_CASE("G-formula estimators") {
  auto d = shifted_data(600, 6);
  NuisanceOptions one;
  one.ratio_override = DensityRatio::constant(1.0);
  auto nv = fitted(d, one);
  double p1 = 0, p0 = 0;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i)) p1 += nv.mu1(i), p0 += nv.mu0(i);
  CHECK(g_weighted(d, get_measure("RD"), nv).estimate ==
        doctest::Approx((p1 - p0) / double(d.n())).epsilon(1e-12));

  NuisanceOptions flat;
  OutcomeFit c;
  c.mu1 = Surface::constant(0.7);
  c.mu0 = Surface::constant(0.2);
  flat.outcome_override = c;
  auto nvc = fitted(d, flat);
  CHECK(g_transported(d, get_measure("OR"), nvc).estimate ==
        doctest::Approx(oracle::phi("OR", 0.7, 0.2)).epsilon(1e-12));
}

TEST_CASE("estimating-equation arm means") {
  auto d = shifted_data(800, 7);
  // Noiseless outcomes on the fitted surfaces: the augmentation vanishes.
  auto nv = fitted(d);
  Eigen::VectorXd y = d.y;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i)) y(i) = d.a(i) ? nv.mu1(i) : nv.mu0(i);
  auto exact = StudyData::create(d.s, d.x, d.a, y);
  auto nve = fitted(exact);
  auto am = ee_arm_means(exact, nve);
  auto tg = g_transported_arm_means(exact, nve);
  CHECK(std::abs(am.correction1) < 1e-10);
  CHECK(am.psi1 == doctest::Approx(tg.psi1).epsilon(1e-10));
  CHECK(am.psi0 == doctest::Approx(tg.psi0).epsilon(1e-10));

  NuisanceOptions zero;
  OutcomeFit z;
  z.mu1 = Surface::constant(0.0);
  z.mu0 = Surface::constant(0.0);
  zero.outcome_override = z;
  auto nvz = fitted(d, zero);
  auto eez = ee_arm_means(d, nvz);
  auto hz = wht_arm_means(d, nvz);
  CHECK(eez.psi1 == doctest::Approx(hz.psi1).epsilon(1e-12));
  CHECK(eez.psi0 == doctest::Approx(hz.psi0).epsilon(1e-12));
}

TEST_CASE("EE zero property and one-step identities") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto d = shifted_data(1500, seed);
    auto nv = fitted(d);
    for (auto mode : {Propensity::Known, Propensity::Estimated}) {
      auto am = ee_arm_means(d, nv, mode);
      CHECK(std::abs(eif_arm(d, nv, 1, am.psi1, mode).mean()) < 1e-10);
      CHECK(std::abs(eif_arm(d, nv, 0, am.psi0, mode).mean()) < 1e-10);
    }
    const double eer = ee(d, get_measure("RD"), nv).estimate;
    for (auto init : {Initializer::Wht, Initializer::GWeighted, Initializer::GTransported, Initializer::EE})
      CHECK(std::abs(one_step(d, get_measure("RD"), nv, init).estimate - eer) < 1e-12);
    for (const char* name : {"RR", "OR", "ERR", "SR", "RRR", "NNT"}) {
      const auto& m = get_measure(name);
      CAPTURE(name);
      CHECK(one_step(d, m, nv, Initializer::EE).estimate == doctest::Approx(ee(d, m, nv).estimate).epsilon(1e-12));
    }
  }
}

TEST_CASE("closed-form one-step corrections agree with the chain rule") {
  ArmMeans init{0.4, 0.25, 0, 0, "x"}, eem{0.43, 0.22, 0, 0, "ee"};
  const double c = 0.97;
  for (const char* name : {"RD", "RR", "OR"}) {
    const auto& m = get_measure(name);
    double generic = eval_phi(m, init.psi1, init.psi0) +
                     eval_dphi_d1(m, init.psi1, init.psi0) * c * (eem.psi1 - init.psi1) +
                     eval_dphi_d0(m, init.psi1, init.psi0) * c * (eem.psi0 - init.psi0);
    CHECK(*one_step_closed_form(m, init, eem, c) == doctest::Approx(generic).epsilon(1e-13));
  }
  CHECK_FALSE(one_step_closed_form(get_measure("SR"), init, eem, c).has_value());
}

TEST_CASE("discrete population: estimators reproduce the identification formulas") {
  oracle::Discrete pop;
  auto d = pop.data();
  auto nv = fitted(d);
  for (int a : {0, 1}) {
    CHECK(pop.transport(a) == doctest::Approx(pop.weight_outcomes(a)).epsilon(1e-13));
    CHECK(pop.transport(a) == doctest::Approx(pop.weight_conditional(a)).epsilon(1e-13));
  }
  auto ht = wht_arm_means(d, nv), wg = g_weighted_arm_means(d, nv), tg = g_transported_arm_means(d, nv),
       eem = ee_arm_means(d, nv);
  CHECK(std::abs(tg.psi1 - pop.transport(1)) < 1e-10);
  CHECK(std::abs(tg.psi0 - pop.transport(0)) < 1e-10);
  CHECK(std::abs(ht.psi1 - pop.weight_outcomes(1)) < 1e-10);
  CHECK(std::abs(ht.psi0 - pop.weight_outcomes(0)) < 1e-10);
  CHECK(std::abs(wg.psi1 - pop.weight_conditional(1)) < 1e-10);
  CHECK(std::abs(wg.psi0 - pop.weight_conditional(0)) < 1e-10);
  CHECK(std::abs(eem.psi1 - pop.transport(1)) < 1e-10);
  for (const char* name : {"RD", "RR", "OR"}) {
    double want = oracle::phi(name, pop.transport(1), pop.transport(0));
    PipelineOptions opt;
    opt.sandwich = false;
    for (const auto& r : estimate_all(d, {"wht", "neyman", "wG", "tG", "ee", "os:wht", "os:tG"}, {name}, opt)) {
      CAPTURE(r.estimator);
      REQUIRE(r.ok());
      CHECK(std::abs(r.estimate - want) < 1e-10);
    }
  }
}

TEST_CASE("oracle wHT variance") {
  auto d = shifted_data(400, 8, true);
  Eigen::VectorXd y = d.y;
  const double c1 = 0.8, c0 = 0.3;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i)) y(i) = d.a(i) ? c1 : c0;
  auto dc = StudyData::create(d.s, d.x, d.a, y);
  NuisanceOptions one;
  one.ratio_override = DensityRatio::constant(1.0);
  auto nv = fitted(dc, one);
  const double alpha = dc.alpha_hat(), pi = 0.5;
  double n1 = 0;
  for (Index i = 0; i < d.N(); ++i) n1 += d.s(i) && d.a(i) == 1;
  const double f1 = n1 / (double(d.n()) * pi), f0 = (double(d.n()) - n1) / (double(d.n()) * (1 - pi));
  double want = (c1 * c1 * f1 / pi + c0 * c0 * f0 / (1 - pi) - (c1 * f1 - c0 * f0) * (c1 * f1 - c0 * f0)) / alpha;
  CHECK(variance_oracle_wht(dc, get_measure("RD"), nv) == doctest::Approx(want).epsilon(1e-12));

  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i) && d.a(i) == 0) y(i) = 0.0;
  auto dz = StudyData::create(d.s, d.x, d.a, y);
  CHECK_THROWS_AS(variance_oracle_wht(dz, get_measure("RR"), fitted(dz, one)), DomainError);
}

TEST_CASE("sandwich matches the two-sample Neyman variance without covariates") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  const Index N = 3000;
  Eigen::VectorXi s(N), a(N);
  Eigen::VectorXd y(N);
  for (Index i = 0; i < N; ++i) {
    s(i) = i % 10 < 3;
    a(i) = s(i) ? int(i % 20 < 10) : -1;
    y(i) = s(i) ? (a(i) ? 1.0 + 2.0 * g(rng) : g(rng)) : std::nan("");
  }
  auto d = StudyData::create(s, Eigen::MatrixXd(N, 0), a, y);
  auto nf = fit_nuisances(d);
  double m1 = 0, m0 = 0, n1 = 0, n0 = 0;
  for (Index i = 0; i < N; ++i)
    if (s(i)) (a(i) ? m1 : m0) += y(i), (a(i) ? n1 : n0) += 1;
  m1 /= n1, m0 /= n0;
  double v1 = 0, v0 = 0;
  for (Index i = 0; i < N; ++i)
    if (s(i)) (a(i) ? v1 : v0) += (a(i) ? (y(i) - m1) * (y(i) - m1) : (y(i) - m0) * (y(i) - m0));
  double hand = v1 / n1 / n1 + v0 / n0 / n0;
  for (const char* est : {"neyman", "ee"}) {
    CAPTURE(est);
    double v = variance_sandwich(d, est, get_measure("RD"), nf) / double(N);
    CHECK(v == doctest::Approx(hand).epsilon(0.01));
  }
}

TEST_CASE("sandwich engine rejects non-parametric nuisances") {
  auto d = shifted_data(500, 9);
  NuisanceOptions one;
  one.ratio_override = DensityRatio::constant(1.0);
  auto nf = fit_nuisances(d, one);
  CHECK_THROWS_AS(variance_sandwich(d, "wht", get_measure("RD"), nf), CapabilityError);
  CHECK_NOTHROW(variance_sandwich(d, "tG", get_measure("RD"), nf));
  CHECK_THROWS_AS(build_system(d, "os:tG", fit_nuisances(d)), CapabilityError);
}

TEST_CASE("stratified bootstrap") {
  auto d = shifted_data(600, 10);
  PipelineOptions opt;
  BootstrapConfig cfg;
  cfg.B = 200;
  cfg.seed = 3;
  cfg.keep_distribution = true;
  auto r = bootstrap_ci(d, "ee", get_measure("RD"), opt, cfg);
  CHECK(r.lo <= r.hi);
  int outside = 0;
  for (double v : r.distribution) outside += (v < r.lo || v > r.hi);
  CHECK(outside >= 4);
  CHECK(outside <= 12);
  auto again = bootstrap_ci(d, "ee", get_measure("RD"), opt, cfg);
  CHECK(again.lo == r.lo);
  CHECK(again.hi == r.hi);
  cfg.B = 50;
  CHECK_THROWS_AS(bootstrap_ci(d, "ee", get_measure("RD"), opt, cfg), ValidationError);

  auto idx = stratified_resample(d, 4);
  auto db = d.rows(idx);
  CHECK(db.n() == d.n());
  CHECK(profile(db).n1 == profile(d).n1);
}

TEST_CASE("estimate_all reports failures per cell") {
  auto d = shifted_data(500, 14);
  PipelineOptions opt;
  auto reps = estimate_all(d, {"ee", "nope", "effect/ee"}, {"RD", "NNT"}, opt);
  REQUIRE(reps.size() == 6);
  CHECK(reps[0].ok());
  CHECK(reps[0].std_error.has_value());
  CHECK(reps[2].error_kind == std::string("lookup"));
  CHECK(reps[4].error_kind == std::string("capability"));
  CHECK(canonical_estimator("os") == "os:tG");
  CHECK(canonical_estimator("effect/os-at-EE") == "effect/os:ee");
}
