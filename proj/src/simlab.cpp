#include "causal_transport/simlab.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "causal_transport/errors.hpp"
#include "causal_transport/parallel.hpp"
#include "causal_transport/version.hpp"

namespace ct {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(Index(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

double lin(const Eigen::VectorXd& b, const RowRef& x) { return b(0) + x.dot(b.tail(b.size() - 1)); }

const char* design_name(Design d) {
  switch (d) {
    case Design::Exp1Nonlinear: return "exp1_nonlinear";
    case Design::Exp2RD: return "exp2_rd";
    case Design::Exp2RR: return "exp2_rr";
    case Design::Exp2OR: return "exp2_or";
    case Design::AppELinear: return "appE_linear";
  }
  return "";
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd from_json_vec(const json& j) {
  Eigen::VectorXd v(Index(j.size()));
  for (Index k = 0; k < v.size(); ++k) v(k) = j[size_t(k)].get<double>();
  return v;
}

const char* link_choice_name(LinkChoice c) {
  switch (c) {
    case LinkChoice::Auto: return "auto";
    case LinkChoice::Identity: return "identity";
    case LinkChoice::Logit: return "logit";
  }
  return "";
}

// Welford accumulator over (f1, f0) pairs.
struct PairStats {
  Index k = 0;
  double m1 = 0, m0 = 0, s11 = 0, s00 = 0, s10 = 0;
  void add(double f1, double f0) {
    ++k;
    double d1 = f1 - m1, d0 = f0 - m0;
    m1 += d1 / double(k);
    m0 += d0 / double(k);
    s11 += d1 * (f1 - m1);
    s00 += d0 * (f0 - m0);
    s10 += d1 * (f0 - m0);
  }
};

}  // namespace

double compensated_sum(const std::vector<double>& v) {
  double s = 0, c = 0;
  for (double x : v) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

double DgpSpec::mean(bool source, int a, const RowRef& x) const {
  switch (design) {
    case Design::Exp1Nonlinear: {
      double e0 = lin(beta0, x);
      return sigmoid(a == 1 ? e0 * lin(beta1, x) : e0);
    }
    case Design::Exp2RD: {
      const Eigen::VectorXd& b = a == 1 ? beta1 : beta0;
      return source ? lin(b, x) : lin(b + theta, x);
    }
    case Design::Exp2RR: {
      double base = sigmoid(lin(source ? beta_s : beta_t, x));
      return a == 1 ? base * sigmoid(lin(gamma, x)) : base;
    }
    case Design::Exp2OR: {
      Eigen::VectorXd b = source ? beta_s : beta_t;
      if (a == 1) b += gamma;
      return sigmoid(lin(b, x));
    }
    case Design::AppELinear: return lin(a == 1 ? beta1 : beta0, x);
  }
  return 0;
}

void DgpSpec::validate() const {
  auto need = [&](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != p + 1)
      throw ValidationError("spec " + name + ": " + what + " must have length p + 1 = " + std::to_string(p + 1));
  };
  if (p < 1) throw ValidationError("spec " + name + ": p must be positive");
  if (!(alpha > 0 && alpha < 1) || !(pi > 0 && pi < 1))
    throw ValidationError("spec " + name + ": alpha and pi must lie in (0, 1)");
  if (nu_s.size() != p || nu_t.size() != p)
    throw ValidationError("spec " + name + ": nu_s and nu_t must have length p");
  switch (design) {
    case Design::Exp1Nonlinear:
    case Design::AppELinear:
      need(beta0, "beta0");
      need(beta1, "beta1");
      break;
    case Design::Exp2RD:
      need(beta0, "beta0");
      need(beta1, "beta1");
      need(theta, "theta");
      break;
    case Design::Exp2RR:
    case Design::Exp2OR:
      need(beta_s, "beta_s");
      need(beta_t, "beta_t");
      need(gamma, "gamma");
      break;
  }
}

std::vector<std::string> spec_names() { return {"exp1_nonlinear", "exp2_rd", "exp2_rr", "exp2_or", "appE_linear"}; }

DgpSpec builtin_spec(const std::string& name) {
  DgpSpec s;
  s.p = 4;
  s.nu_s = Eigen::VectorXd::Zero(4);
  s.nu_t = Eigen::VectorXd::Constant(4, 0.3);
  const Eigen::VectorXd appe1 = vec({0.5, 1.2, 1.1, 3.3, -0.6});
  const Eigen::VectorXd appe0 = vec({-0.2, -0.6, 0.6, 1.7, 0.3});
  const Eigen::VectorXd exp2_bt = vec({0.0, 0.8, 0.8, -0.8, 0.0});
  if (name == "exp1_nonlinear" || name == "exp1") {
    s.name = "exp1_nonlinear";
    s.design = Design::Exp1Nonlinear;
    s.beta0 = vec({-3.59, 2.0, 2.0, 2.0, 2.0});
    s.beta1 = vec({-4.61, -2.25, -2.25, -2.25, -2.25});
    s.fit_link = LinkChoice::Identity;
    s.calibration = "exp1-calibration-v1 (config/exp1_calibration.json)";
  } else if (name == "exp2_rd") {
    s.name = "exp2_rd";
    s.design = Design::Exp2RD;
    s.beta0 = appe0;
    s.beta1 = appe1;
    s.theta = vec({0.5, 0.5, -0.5, 0.5, 0.5});
    s.expose_target_controls = true;
    s.fit_link = LinkChoice::Identity;
    s.calibration = "exp2-design-v2";
  } else if (name == "exp2_rr") {
    s.name = "exp2_rr";
    s.design = Design::Exp2RR;
    s.beta_s = vec({2.5, 0.2, -0.2, 0.2, 0.0});
    s.beta_t = exp2_bt;
    s.gamma = vec({-0.5, 0.5, 0.5, -0.5, 0.0});
    s.expose_target_controls = true;
    s.fit_link = LinkChoice::Logit;
    s.calibration = "exp2-design-v2";
  } else if (name == "exp2_or") {
    s.name = "exp2_or";
    s.design = Design::Exp2OR;
    s.beta_s = vec({1.0, 0.3, -0.3, 0.3, 0.0});
    s.beta_t = exp2_bt;
    s.gamma = vec({-1.0, 0.5, 0.5, -0.5, 0.0});
    s.expose_target_controls = true;
    s.fit_link = LinkChoice::Logit;
    s.calibration = "exp2-design-v2";
  } else if (name == "appE_linear") {
    s.name = "appE_linear";
    s.design = Design::AppELinear;
    s.beta0 = appe0;
    s.beta1 = appe1;
    s.nu_s = Eigen::VectorXd::Constant(4, 1.0);
    s.nu_t = Eigen::VectorXd::Constant(4, 1.3);
    s.fit_link = LinkChoice::Identity;
    s.calibration = "appE-design-v1";
  } else {
    std::string valid;
    for (const auto& n : spec_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw LookupError("unknown spec '" + name + "'; valid: " + valid + " (exp1 is an alias)");
  }
  s.validate();
  return s;
}

json spec_to_json(const DgpSpec& s) {
  json j;
  j["name"] = s.name;
  j["design"] = design_name(s.design);
  j["p"] = s.p;
  j["alpha"] = s.alpha;
  j["pi"] = s.pi;
  j["nu_s"] = to_std(s.nu_s);
  j["nu_t"] = to_std(s.nu_t);
  auto put = [&](const char* k, const Eigen::VectorXd& v) {
    if (v.size()) j[k] = to_std(v);
  };
  put("beta0", s.beta0);
  put("beta1", s.beta1);
  put("beta_s", s.beta_s);
  put("beta_t", s.beta_t);
  put("gamma", s.gamma);
  put("theta", s.theta);
  if (s.continuous()) j["noise_sd"] = s.noise_sd;
  j["expose_target_controls"] = s.expose_target_controls;
  j["fit_link"] = link_choice_name(s.fit_link);
  j["calibration"] = s.calibration;
  return j;
}

DgpSpec spec_from_json(const json& j) {
  DgpSpec s = builtin_spec(j.at("name").get<std::string>());
  auto get = [&](const char* k, Eigen::VectorXd& v) {
    if (j.contains(k)) v = from_json_vec(j[k]);
  };
  if (j.contains("p")) s.p = j["p"].get<int>();
  if (j.contains("alpha")) s.alpha = j["alpha"].get<double>();
  if (j.contains("pi")) s.pi = j["pi"].get<double>();
  get("nu_s", s.nu_s);
  get("nu_t", s.nu_t);
  get("beta0", s.beta0);
  get("beta1", s.beta1);
  get("beta_s", s.beta_s);
  get("beta_t", s.beta_t);
  get("gamma", s.gamma);
  get("theta", s.theta);
  if (j.contains("noise_sd")) s.noise_sd = j["noise_sd"].get<double>();
  if (j.contains("expose_target_controls")) s.expose_target_controls = j["expose_target_controls"].get<bool>();
  if (j.contains("fit_link")) s.fit_link = parse_link(j["fit_link"].get<std::string>());
  if (j.contains("calibration")) s.calibration = j["calibration"].get<std::string>();
  s.validate();
  return s;
}

SimData generate(const DgpSpec& spec, Index N, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int p = spec.p;
  Eigen::VectorXi s(N), a(N);
  Eigen::MatrixXd x(N, p);
  Eigen::VectorXd y(N);
  SimData out;
  out.y0.resize(N);
  out.y1.resize(N);
  out.mu0.resize(N);
  out.mu1.resize(N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index i = 0; i < N; ++i) {
    const bool src = unif(rng) < spec.alpha;
    s(i) = src ? 1 : 0;
    const Eigen::VectorXd& nu = src ? spec.nu_s : spec.nu_t;
    for (int j = 0; j < p; ++j) x(i, j) = nu(j) + norm(rng);
    const double ua = unif(rng);
    const double e0 = spec.continuous() ? norm(rng) : unif(rng);
    const double e1 = spec.continuous() ? norm(rng) : unif(rng);
    const double m0 = spec.mean(src, 0, x.row(i)), m1 = spec.mean(src, 1, x.row(i));
    out.mu0(i) = m0;
    out.mu1(i) = m1;
    out.y0(i) = spec.continuous() ? m0 + spec.noise_sd * e0 : double(e0 < m0);
    out.y1(i) = spec.continuous() ? m1 + spec.noise_sd * e1 : double(e1 < m1);
    if (src) {
      a(i) = ua < spec.pi ? 1 : 0;
      y(i) = a(i) == 1 ? out.y1(i) : out.y0(i);
    } else if (spec.expose_target_controls) {
      a(i) = 0;
      y(i) = out.y0(i);
    } else {
      a(i) = -1;
      y(i) = nan;
    }
  }
  out.data = StudyData::create(std::move(s), std::move(x), std::move(a), std::move(y), spec.pi);
  return out;
}

OutcomeFit oracle_outcomes(const DgpSpec& spec) {
  OutcomeFit of;
  of.link = spec.continuous() ? Link::Identity : Link::Logit;
  of.mu0 = Surface::function([spec](const RowRef& x) { return spec.mean(true, 0, x); });
  of.mu1 = Surface::function([spec](const RowRef& x) { return spec.mean(true, 1, x); });
  return of;
}

PopulationMeans population_means(const DgpSpec& spec, bool source, Index M, std::uint64_t seed) {
  if (M < 2) throw ValidationError("population means need at least 2 draws");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  const Eigen::VectorXd& nu = source ? spec.nu_s : spec.nu_t;
  Eigen::RowVectorXd z(spec.p), xp(spec.p), xm(spec.p);
  PairStats st;
  for (Index k = 0; k < M / 2; ++k) {
    for (int j = 0; j < spec.p; ++j) z(j) = norm(rng);
    xp = nu.transpose() + z;
    xm = nu.transpose() - z;
    st.add(0.5 * (spec.mean(source, 1, xp) + spec.mean(source, 1, xm)),
           0.5 * (spec.mean(source, 0, xp) + spec.mean(source, 0, xm)));
  }
  PopulationMeans pm;
  pm.psi1 = st.m1;
  pm.psi0 = st.m0;
  double denom = double(st.k) * double(st.k - 1);
  pm.cov << st.s11 / denom, st.s10 / denom, st.s10 / denom, st.s00 / denom;
  pm.draws = 2 * st.k;
  return pm;
}

PopulationMeans population_means_qmc(const DgpSpec& spec, bool source, Index M) {
  boost::random::sobol_engine<std::uint_least32_t, 32u, boost::random::default_sobol_table> eng(spec.p);
  const boost::math::normal nd;
  const Eigen::VectorXd& nu = source ? spec.nu_s : spec.nu_t;
  Eigen::RowVectorXd x(spec.p);
  eng.discard(spec.p);
  std::vector<double> f1(static_cast<size_t>(M)), f0(static_cast<size_t>(M));
  for (Index k = 0; k < M; ++k) {
    for (int j = 0; j < spec.p; ++j) {
      double u = (double(eng()) + 0.5) / 4294967296.0;
      x(j) = nu(j) + boost::math::quantile(nd, u);
    }
    f1[size_t(k)] = spec.mean(source, 1, x);
    f0[size_t(k)] = spec.mean(source, 0, x);
  }
  PopulationMeans pm;
  pm.psi1 = compensated_sum(f1) / double(M);
  pm.psi0 = compensated_sum(f0) / double(M);
  pm.draws = M;
  return pm;
}

Truth truth_from_means(const EffectMeasure& m, const PopulationMeans& t, const PopulationMeans& s) {
  Truth tr;
  tr.measure = m.name;
  tr.psi1_t = t.psi1;
  tr.psi0_t = t.psi0;
  tr.psi1_s = s.psi1;
  tr.psi0_s = s.psi0;
  tr.tau_t = eval_phi(m, t.psi1, t.psi0);
  tr.tau_s = eval_phi(m, s.psi1, s.psi0);
  auto se = [&](const PopulationMeans& pm) {
    try {
      Eigen::Vector2d g(eval_dphi_d1(m, pm.psi1, pm.psi0), eval_dphi_d0(m, pm.psi1, pm.psi0));
      return std::sqrt(std::max(0.0, double(g.transpose() * pm.cov * g)));
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  tr.se_t = se(t);
  tr.se_s = se(s);
  tr.draws = t.draws;
  return tr;
}

Truth true_effects(const DgpSpec& spec, const EffectMeasure& m, Index M, std::uint64_t seed) {
  if (M < 1000000) throw ValidationError("true_effects needs M >= 1e6 covariate draws");
  auto t = population_means(spec, false, M, stream_seed(seed, 0));
  auto s = population_means(spec, true, M, stream_seed(seed, 1));
  return truth_from_means(m, t, s);
}

const CellSummary& SimulationReport::cell(const std::string& estimator, const std::string& measure) const {
  std::string id = canonical_estimator(estimator);
  for (const auto& c : cells)
    if (c.estimator == id && c.measure == get_measure(measure).name) return c;
  throw LookupError("no cell for " + estimator + " / " + measure);
}

SimulationReport run_study(const DgpSpec& spec, const StudyConfig& cfg_in) {
  spec.validate();
  StudyConfig cfg = cfg_in;
  if (cfg.R < 1) throw ValidationError("study needs R >= 1");
  if (cfg.N < 10) throw ValidationError("study needs N >= 10");
  for (auto& e : cfg.estimators) e = canonical_estimator(e);
  for (auto& m : cfg.measures) m = get_measure(m).name;
  for (const auto& e : cfg.estimators)
    if (is_effect_estimator(e) && !spec.expose_target_controls)
      throw CapabilityError("estimator " + e + " needs target-control outcomes, which spec " + spec.name +
                            " does not expose");

  SimulationReport rep;
  rep.spec = spec;
  rep.version = kVersion;
  auto pt = population_means(spec, false, cfg.truth_draws, stream_seed(cfg.seed, 0xA11CE));
  auto ps = population_means(spec, true, cfg.truth_draws, stream_seed(cfg.seed, 0xB0B));
  std::map<std::string, Truth> truth;
  for (const auto& m : cfg.measures) {
    truth[m] = truth_from_means(get_measure(m), pt, ps);
    rep.truths.push_back(truth[m]);
  }

  const size_t cells = cfg.estimators.size() * cfg.measures.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.estimates.assign(cfg.R, std::vector<double>(cells, nan));
  rep.std_errors.assign(cfg.R, std::vector<double>(cells, nan));
  rep.covered.assign(cfg.R, std::vector<char>(cells, -1));
  std::vector<std::vector<std::string>> errors(cfg.R, std::vector<std::string>(cells));

  parallel_for(cfg.R, cfg.threads, [&](std::int64_t r) {
    const std::uint64_t s = stream_seed(cfg.seed, std::uint64_t(r));
    PipelineOptions opt = cfg.pipeline;
    opt.fold_seed = splitmix64(s ^ 0x5EED);
    std::vector<EstimateReport> out;
    std::optional<SimData> sd;
    try {
      sd = generate(spec, cfg.N, s);
      PreparedData pd = prepare(sd->data, opt);
      if (cfg.inspect) cfg.inspect(int(r), *sd, pd);
      for (const auto& e : cfg.estimators)
        for (const auto& m : cfg.measures) out.push_back(estimate_cell(pd, e, get_measure(m), opt));
    } catch (const Error& err) {
      out.clear();
      for (const auto& e : cfg.estimators)
        for (const auto& m : cfg.measures) {
          EstimateReport f;
          f.estimator = e;
          f.measure = m;
          f.error = err.what();
          f.error_kind = err.kind();
          out.push_back(f);
        }
    }
    for (size_t c = 0; c < cells; ++c) {
      const auto& er = out[c];
      if (!er.ok()) {
        std::string msg = er.error_kind + ": " + *er.error;
        errors[r][c] = msg.substr(0, msg.find(" ("));
        continue;
      }
      rep.estimates[r][c] = er.estimate;
      if (er.ci) {
        rep.std_errors[r][c] = er.std_error.value_or(nan);
        const double t = truth[er.measure].tau_t;
        rep.covered[r][c] = (*er.ci)[0] <= t && t <= (*er.ci)[1];
      }
    }
  });

  std::string failures_msg;
  size_t c = 0;
  for (const auto& e : cfg.estimators)
    for (const auto& m : cfg.measures) {
      CellSummary cs;
      cs.estimator = e;
      cs.measure = m;
      cs.truth = truth[m].tau_t;
      cs.truth_se = truth[m].se_t;
      std::vector<double> v;
      int cov = 0;
      for (int r = 0; r < cfg.R; ++r) {
        if (!errors[r][c].empty()) {
          ++cs.failures;
          cs.failure_modes[errors[r][c].substr(0, 160)]++;
          continue;
        }
        v.push_back(rep.estimates[r][c]);
        if (rep.covered[r][c] >= 0) {
          ++cs.with_ci;
          cov += rep.covered[r][c];
        }
      }
      cs.successes = int(v.size());
      if (!v.empty()) {
        const double k = double(v.size());
        cs.mean = compensated_sum(v) / k;
        std::vector<double> dev2(v.size()), err2(v.size());
        for (size_t i = 0; i < v.size(); ++i) {
          dev2[i] = (v[i] - cs.mean) * (v[i] - cs.mean);
          err2[i] = (v[i] - cs.truth) * (v[i] - cs.truth);
        }
        cs.bias = cs.mean - cs.truth;
        cs.sd = std::sqrt(compensated_sum(dev2) / k);
        cs.rmse = std::sqrt(compensated_sum(err2) / k);
        cs.mc_se = cs.sd / std::sqrt(k);
        const double tse = std::isfinite(cs.truth_se) ? cs.truth_se : 0.0;
        const double denom = std::sqrt(cs.mc_se * cs.mc_se + tse * tse);
        cs.z = denom > 0 ? cs.bias / denom : (cs.bias == 0 ? 0.0 : std::copysign(INFINITY, cs.bias));
      } else {
        cs.mean = cs.bias = cs.sd = cs.rmse = cs.mc_se = cs.z = nan;
      }
      if (cs.with_ci > 0) cs.coverage = double(cov) / double(cs.with_ci);
      if (cs.failures > 0.2 * cfg.R) {
        failures_msg += "\n  " + e + "/" + m + ": " + std::to_string(cs.failures) + " of " +
                        std::to_string(cfg.R) + " replications failed";
        for (const auto& [k, n] : cs.failure_modes) failures_msg += "\n    " + std::to_string(n) + " x " + k;
      }
      rep.cells.push_back(cs);
      ++c;
    }
  rep.config = cfg;
  rep.config.inspect = nullptr;
  if (!failures_msg.empty()) throw StudyError("more than 20% of replications failed:" + failures_msg);
  return rep;
}

json config_to_json(const StudyConfig& cfg) {
  json j;
  j["N"] = cfg.N;
  j["R"] = cfg.R;
  j["seed"] = cfg.seed;
  j["estimators"] = cfg.estimators;
  j["measures"] = cfg.measures;
  j["truth_draws"] = cfg.truth_draws;
  const auto& p = cfg.pipeline;
  j["link"] = link_choice_name(p.nuisance.link);
  j["folds"] = p.folds;
  j["ratio_clip"] = p.nuisance.ratio_clip;
  j["ee_propensity"] = p.ee_propensity == Propensity::Known ? "known" : "estimated";
  j["sandwich"] = p.sandwich;
  j["level"] = p.level;
  j["ratio_override"] = p.nuisance.ratio_override.has_value();
  j["outcome_override"] = p.nuisance.outcome_override.has_value();
  return j;
}

json report_to_json(const SimulationReport& r) {
  json j;
  j["version"] = r.version;
  j["spec"] = spec_to_json(r.spec);
  j["config"] = config_to_json(r.config);
  json tr = json::array();
  for (const auto& t : r.truths)
    tr.push_back({{"measure", t.measure},
                  {"tau_t", number_or_null(t.tau_t)},
                  {"tau_s", number_or_null(t.tau_s)},
                  {"se_t", number_or_null(t.se_t)},
                  {"se_s", number_or_null(t.se_s)},
                  {"psi1_t", t.psi1_t},
                  {"psi0_t", t.psi0_t},
                  {"psi1_s", t.psi1_s},
                  {"psi0_s", t.psi0_s},
                  {"draws", t.draws}});
  j["truth"] = tr;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cj;
    cj["estimator"] = c.estimator;
    cj["measure"] = c.measure;
    cj["truth"] = number_or_null(c.truth);
    cj["successes"] = c.successes;
    cj["failures"] = c.failures;
    cj["mean"] = number_or_null(c.mean);
    cj["bias"] = number_or_null(c.bias);
    cj["sd"] = number_or_null(c.sd);
    cj["rmse"] = number_or_null(c.rmse);
    cj["mc_se"] = number_or_null(c.mc_se);
    cj["z"] = number_or_null(c.z);
    cj["coverage"] = number_or_null(c.coverage);
    cj["with_ci"] = c.with_ci;
    cj["failure_modes"] = c.failure_modes;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

std::string tidy_csv(const SimulationReport& r) {
  std::ostringstream o;
  o << "estimator,measure,metric,value\n";
  auto row = [&](const CellSummary& c, const char* metric, double v) {
    o << c.estimator << ',' << c.measure << ',' << metric << ',' << (std::isfinite(v) ? format_double(v) : "")
      << '\n';
  };
  for (const auto& c : r.cells) {
    row(c, "truth", c.truth);
    row(c, "mean", c.mean);
    row(c, "bias", c.bias);
    row(c, "sd", c.sd);
    row(c, "rmse", c.rmse);
    row(c, "mc_se", c.mc_se);
    row(c, "z", c.z);
    row(c, "coverage", c.coverage);
    row(c, "successes", c.successes);
    row(c, "failures", c.failures);
  }
  return o.str();
}

std::string replications_csv(const SimulationReport& r) {
  std::ostringstream o;
  o << "replication,estimator,measure,estimate,se\n";
  for (size_t rep = 0; rep < r.estimates.size(); ++rep) {
    size_t c = 0;
    for (const auto& e : r.config.estimators)
      for (const auto& m : r.config.measures) {
        double v = r.estimates[rep][c], s = r.std_errors[rep][c];
        o << rep << ',' << e << ',' << m << ',' << (std::isfinite(v) ? format_double(v) : "") << ','
          << (std::isfinite(s) ? format_double(s) : "") << '\n';
        ++c;
      }
  }
  return o.str();
}

}  // namespace ct
