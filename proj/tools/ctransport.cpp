// ctransport: estimate, simulate, truth, selfcheck.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "causal_transport/data.hpp"
#include "causal_transport/errors.hpp"
#include "causal_transport/measures.hpp"
#include "causal_transport/mestimation.hpp"
#include "causal_transport/parallel.hpp"
#include "causal_transport/pipeline.hpp"
#include "causal_transport/report.hpp"
#include "causal_transport/simlab.hpp"
#include "causal_transport/version.hpp"

namespace fs = std::filesystem;
using ct::json;

namespace {

constexpr int kOk = 0, kFatal = 1, kPartial = 2, kUsage = 64, kFile = 66;

// Accepts JSON objects (nested objects become subcommand sections) as well as key=value files.
class JsonOrIniConfig : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream ss(text);
      return CLI::ConfigINI::from_config(ss);
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> out;
    walk(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
  static void walk(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(k);
        walk(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = k;
      if (v.is_array())
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      else
        item.inputs.push_back(scalar(v));
      out.push_back(item);
    }
  }
};

std::vector<std::string> split_list(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& s : in) {
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ct::FileError("cannot write " + path.string());
  f << text;
  if (!f) throw ct::FileError("write failed: " + path.string());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ct::FileError("cannot create output directory " + dir);
}

std::string csv_cell(double v) { return std::isfinite(v) ? ct::format_double(v) : ""; }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// Shared nuisance/pipeline flags.
struct PipelineFlags {
  std::string link = "auto";
  double ratio_clip = 0.0;
  int folds = 1;
  std::string ee_propensity = "known";
  double level = 0.95;
  bool no_sandwich = false;

  void add(CLI::App* app) {
    app->add_option("--link", link, "outcome link: auto, identity or logit")->capture_default_str();
    app->add_option("--ratio-clip", ratio_clip, "clamp P(S=1|x) to [c, 1-c]; 0 disables")
        ->check(CLI::Range(0.0, 0.5))
        ->capture_default_str();
    app->add_option("--folds", folds, "cross-fitting folds (1 = full-sample nuisances)")
        ->check(CLI::Range(1, 20))
        ->capture_default_str();
    app->add_option("--ee-propensity", ee_propensity, "known or estimated arm probabilities")
        ->check(CLI::IsMember({"known", "estimated"}))
        ->capture_default_str();
    app->add_option("--level", level, "confidence level")->check(CLI::Range(0.5, 0.999))->capture_default_str();
    app->add_flag("--no-sandwich", no_sandwich, "skip sandwich standard errors");
  }

  ct::PipelineOptions options() const {
    ct::PipelineOptions o;
    o.nuisance.link = ct::parse_link(link);
    o.nuisance.ratio_clip = ratio_clip;
    o.folds = folds;
    o.ee_propensity = ee_propensity == "known" ? ct::Propensity::Known : ct::Propensity::Estimated;
    o.level = level;
    o.sandwich = !no_sandwich;
    return o;
  }

  json to_json() const {
    return {{"link", link},
            {"ratio_clip", ratio_clip},
            {"folds", folds},
            {"ee_propensity", ee_propensity},
            {"level", level},
            {"sandwich", !no_sandwich}};
  }
};

// ---------------------------------------------------------------- estimate

struct EstimateFlags {
  std::string data;
  ct::CsvSchema schema;
  std::vector<std::string> cols_x, measures{"RD"}, estimators{"ee"};
  double pi = 0.5;
  int boot = 0;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out, format = "json";
  PipelineFlags pipe;
};

std::vector<std::string> header_covariates(const std::string& path, const ct::CsvSchema& s) {
  std::ifstream f(path);
  if (!f) throw ct::FileError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw ct::ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cols;
  for (auto& c : split_list({line}))
    if (c != s.col_s && c != s.col_a && c != s.col_y) cols.push_back(c);
  return cols;
}

int run_estimate(const EstimateFlags& f) {
  ct::CsvSchema schema = f.schema;
  schema.cols_x = split_list(f.cols_x);
  if (schema.cols_x.empty()) schema.cols_x = header_covariates(f.data, schema);
  const auto measures = split_list(f.measures);
  const auto estimators = split_list(f.estimators);
  for (const auto& m : measures) ct::get_measure(m);
  for (const auto& e : estimators) ct::canonical_estimator(e);

  ct::StudyData d = ct::load_csv(f.data, schema, f.pi);
  ct::PipelineOptions opt = f.pipe.options();
  opt.fold_seed = f.seed;
  auto reports = ct::estimate_all(d, estimators, measures, opt);

  if (f.boot > 0) {
    ct::BootstrapConfig bc;
    bc.B = f.boot;
    bc.level = f.pipe.level;
    bc.seed = f.seed;
    bc.threads = f.threads;
    auto boot = ct::bootstrap_all(d, estimators, measures, opt, bc);
    for (size_t c = 0; c < reports.size(); ++c) {
      auto& r = reports[c];
      if (!r.ok()) continue;
      const auto& b = boot[c];
      if (r.ci) r.diagnostics["ci_wald"] = {r.ci->at(0), r.ci->at(1)};
      r.diagnostics["bootstrap_replicates"] = b.replicates;
      r.diagnostics["bootstrap_failures"] = b.failures;
      if (std::isfinite(b.lo) && std::isfinite(b.hi)) {
        r.ci = std::array<double, 2>{b.lo, b.hi};
        r.level = b.level;
        r.diagnostics["ci_method"] = "bootstrap_percentile";
      } else {
        std::string modes;
        for (const auto& [k, v] : b.failure_modes) modes += (modes.empty() ? "" : "; ") + std::to_string(v) + " x " + k;
        r.diagnostics["bootstrap_error"] = "estimator failed in " + std::to_string(b.failures) + " of " +
                                           std::to_string(b.replicates) + " replicates: " + modes;
        r.ci.reset();
      }
    }
  }

  int failed = 0;
  for (const auto& r : reports)
    if (!r.ok()) {
      ++failed;
      std::cerr << "ctransport: " << r.estimator << "/" << r.measure << ": " << r.error_kind << ": " << *r.error
                << "\n";
    }

  std::string text;
  if (f.format == "csv") {
    std::ostringstream o;
    o << "estimator,measure,estimate,se,ci_lo,ci_hi,level,n,m,error_kind,error\n";
    for (const auto& r : reports) {
      o << r.estimator << ',' << r.measure << ',' << csv_cell(r.estimate) << ','
        << (r.std_error ? csv_cell(*r.std_error) : "") << ',' << (r.ci ? csv_cell(r.ci->at(0)) : "") << ','
        << (r.ci ? csv_cell(r.ci->at(1)) : "") << ',' << ct::format_double(r.level) << ',' << r.n << ',' << r.m
        << ',' << r.error_kind << ',' << csv_quote(r.error.value_or("")) << '\n';
    }
    text = o.str();
  } else {
    json cfg = {{"data", f.data},
                {"col_s", schema.col_s},
                {"col_a", schema.col_a},
                {"col_y", schema.col_y},
                {"cols_x", schema.cols_x},
                {"pi", f.pi},
                {"measures", measures},
                {"estimators", estimators},
                {"boot", f.boot},
                {"seed", f.seed}};
    cfg.update(f.pipe.to_json());
    json j = {{"version", ct::kVersion}, {"command", "estimate"}, {"config", cfg}};
    json res = json::array();
    for (const auto& r : reports) res.push_back(ct::to_json(r));
    j["results"] = res;
    text = j.dump(2) + "\n";
  }
  if (f.out.empty()) {
    std::cout << text;
  } else {
    ensure_dir(f.out);
    write_file(fs::path(f.out) / (f.format == "csv" ? "estimates.csv" : "estimates.json"), text);
  }
  if (failed == 0) return kOk;
  return kPartial;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string spec = "appE_linear", spec_file;
  ct::Index n = 5000;
  int reps = 300;
  std::uint64_t seed = 1;
  int threads = 0;
  ct::Index truth_draws = 2000000;
  std::vector<std::string> measures{"RD,RR,OR"}, estimators;
  std::string out;
  bool dump_replications = false;
  PipelineFlags pipe;
};

ct::DgpSpec resolve_spec(const std::string& name, const std::string& file) {
  if (file.empty()) return ct::builtin_spec(name);
  std::ifstream in(file);
  if (!in) throw ct::FileError("cannot open spec file " + file);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ct::ParseError(file + ": " + e.what());
  }
  return ct::spec_from_json(j);
}

std::string summary_table(const ct::SimulationReport& r) {
  std::ostringstream o;
  o << std::left << std::setw(18) << "estimator" << std::setw(13) << "measure" << std::right << std::setw(12)
    << "truth" << std::setw(12) << "mean" << std::setw(12) << "bias" << std::setw(11) << "sd" << std::setw(11)
    << "rmse" << std::setw(9) << "z" << std::setw(9) << "cover" << std::setw(7) << "fail" << "\n";
  o << std::fixed;
  for (const auto& c : r.cells) {
    o << std::left << std::setw(18) << c.estimator << std::setw(13) << c.measure << std::right << std::setprecision(5)
      << std::setw(12) << c.truth << std::setw(12) << c.mean << std::setw(12) << c.bias << std::setw(11) << c.sd
      << std::setw(11) << c.rmse << std::setprecision(2) << std::setw(9) << c.z << std::setprecision(3)
      << std::setw(9);
    if (std::isfinite(c.coverage))
      o << c.coverage;
    else
      o << "-";
    o << std::setw(7) << c.failures << "\n";
  }
  return o.str();
}

std::vector<std::string> default_estimators(const ct::DgpSpec& spec) {
  std::vector<std::string> e = {"wht", "neyman", "wG", "tG", "ee", "os:tG"};
  if (spec.expose_target_controls)
    for (const char* id : {"effect/tgamma", "effect/wgamma", "effect/ee", "effect/os:ee"}) e.push_back(id);
  return e;
}

int run_simulate(const SimulateFlags& f) {
  ct::DgpSpec spec = resolve_spec(f.spec, f.spec_file);
  ct::StudyConfig cfg;
  cfg.N = f.n;
  cfg.R = f.reps;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.truth_draws = f.truth_draws;
  cfg.measures = split_list(f.measures);
  cfg.estimators = split_list(f.estimators);
  if (cfg.estimators.empty()) cfg.estimators = default_estimators(spec);
  cfg.pipeline = f.pipe.options();
  if (f.pipe.link == "auto") cfg.pipeline.nuisance.link = spec.fit_link;
  auto rep = ct::run_study(spec, cfg);
  json j = ct::report_to_json(rep);
  j["config"]["spec_file"] = f.spec_file;
  const std::string text = j.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
    return kOk;
  }
  ensure_dir(f.out);
  write_file(fs::path(f.out) / "report.json", text);
  write_file(fs::path(f.out) / "summary.csv", ct::tidy_csv(rep));
  if (f.dump_replications) write_file(fs::path(f.out) / "replications.csv", ct::replications_csv(rep));
  std::cout << "spec " << spec.name << "  N=" << cfg.N << "  R=" << cfg.R << "  seed=" << cfg.seed << "  version "
            << ct::kVersion << "\n"
            << summary_table(rep);
  return kOk;
}

// ---------------------------------------------------------------- truth

struct TruthFlags {
  std::string spec = "appE_linear", spec_file;
  std::vector<std::string> measures{"RD,RR,OR"};
  ct::Index draws = 2000000;
  std::uint64_t seed = 20240607;
  std::string out;
};

int run_truth(const TruthFlags& f) {
  ct::DgpSpec spec = resolve_spec(f.spec, f.spec_file);
  auto measures = split_list(f.measures);
  if (f.draws < 1000000) throw ct::ValidationError("--draws must be at least 1000000");
  auto pt = ct::population_means(spec, false, f.draws, ct::stream_seed(f.seed, 0));
  auto ps = ct::population_means(spec, true, f.draws, ct::stream_seed(f.seed, 1));
  json res = json::array();
  int failed = 0;
  for (const auto& name : measures) {
    const auto& m = ct::get_measure(name);
    try {
      auto t = ct::truth_from_means(m, pt, ps);
      res.push_back({{"measure", t.measure},
                     {"tau_t", t.tau_t},
                     {"tau_s", t.tau_s},
                     {"se_t", ct::number_or_null(t.se_t)},
                     {"se_s", ct::number_or_null(t.se_s)}});
    } catch (const ct::Error& e) {
      ++failed;
      res.push_back({{"measure", m.name}, {"error", e.what()}, {"error_kind", e.kind()}});
      std::cerr << "ctransport: " << m.name << ": " << e.what() << "\n";
    }
  }
  json j = {{"version", ct::kVersion},
            {"command", "truth"},
            {"spec", ct::spec_to_json(spec)},
            {"config", {{"draws", f.draws}, {"seed", f.seed}, {"measures", measures}}},
            {"means",
             {{"psi1_t", pt.psi1}, {"psi0_t", pt.psi0}, {"psi1_s", ps.psi1}, {"psi0_s", ps.psi0}}},
            {"truth", res}};
  const std::string text = j.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else {
    ensure_dir(f.out);
    write_file(fs::path(f.out) / "truth.json", text);
  }
  return failed ? kPartial : kOk;
}

// ---------------------------------------------------------------- selfcheck

struct SelfcheckFlags {
  int points = 1000;
  std::uint64_t seed = 7;
};

// Three-level covariate with exact counts; every conditional mean is a multiple of 0.1.
ct::StudyData selfcheck_population(double (&mu1)[3], double (&mu0)[3], double (&mu0t)[3], double (&pt)[3]) {
  const int ns[3] = {300, 180, 120}, nt[3] = {280, 420, 700};
  const double m1[3] = {0.6, 0.3, 0.8}, m0[3] = {0.2, 0.5, 0.4}, m0t[3] = {0.3, 0.4, 0.5};
  std::vector<int> s, a;
  std::vector<double> y;
  std::vector<int> lvl;
  for (int k = 0; k < 3; ++k) {
    mu1[k] = m1[k];
    mu0[k] = m0[k];
    mu0t[k] = m0t[k];
    pt[k] = nt[k] / 1400.0;
    for (int arm = 1; arm >= 0; --arm) {
      int cell = ns[k] / 2, ones = int(std::lround((arm ? m1[k] : m0[k]) * cell));
      for (int i = 0; i < cell; ++i) {
        s.push_back(1), a.push_back(arm), y.push_back(i < ones ? 1.0 : 0.0), lvl.push_back(k);
      }
    }
    int ctrl = nt[k] / 2, ones = int(std::lround(m0t[k] * ctrl));
    for (int i = 0; i < nt[k]; ++i) {
      s.push_back(0), lvl.push_back(k);
      if (i < ctrl) {
        a.push_back(0), y.push_back(i < ones ? 1.0 : 0.0);
      } else {
        a.push_back(-1), y.push_back(std::nan(""));
      }
    }
  }
  const auto N = ct::Index(s.size());
  Eigen::VectorXi S(N), A(N);
  Eigen::VectorXd Y(N);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, 2);
  for (ct::Index i = 0; i < N; ++i) {
    S(i) = s[i];
    A(i) = a[i];
    Y(i) = y[i];
    if (lvl[i] > 0) X(i, lvl[i] - 1) = 1.0;
  }
  return ct::StudyData::create(S, X, A, Y, 0.5, {"x1", "x2"});
}

int run_selfcheck(const SelfcheckFlags& f) {
  bool all = true;
  auto line = [&](bool ok, const std::string& what) {
    all = all && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << what << "\n";
  };
  for (const auto& m : ct::all_measures()) {
    auto c = ct::self_test(m, f.points, f.seed);
    std::ostringstream o;
    o << std::scientific << std::setprecision(2) << "measure " << std::left << std::setw(12) << m.name
      << " roundtrip " << c.max_roundtrip_error << "  derivative " << c.max_derivative_rel_error << "  chain "
      << c.max_chain_rule_error;
    line(c.passed, o.str());
  }

  double mu1[3], mu0[3], mu0t[3], pt[3];
  ct::StudyData d = selfcheck_population(mu1, mu0, mu0t, pt);
  double psi1 = 0, psi0 = 0, psi0t = 0;
  for (int k = 0; k < 3; ++k) psi1 += pt[k] * mu1[k], psi0 += pt[k] * mu0[k], psi0t += pt[k] * mu0t[k];
  ct::PipelineOptions opt;
  opt.sandwich = false;
  opt.oracle_variance = false;
  const std::vector<std::string> mean_est = {"wht", "neyman", "wG", "tG", "ee", "os:tG"};
  const std::vector<std::string> eff_est = {"effect/tgamma", "effect/wgamma", "effect/ee", "effect/os:ee"};
  for (const char* name : {"RD", "RR", "OR"}) {
    const auto& m = ct::get_measure(name);
    double want = ct::eval_phi(m, psi1, psi0);
    for (const auto& r : ct::estimate_all(d, mean_est, {name}, opt)) {
      double err = r.ok() ? std::abs(r.estimate - want) : INFINITY;
      std::ostringstream o;
      o << "discrete " << r.estimator << "/" << name << " error " << std::scientific << std::setprecision(2) << err;
      line(err < 1e-10, o.str());
    }
    double e1 = 0;
    for (int k = 0; k < 3; ++k) e1 += pt[k] * ct::eval_gamma(m, ct::eval_phi(m, mu1[k], mu0[k]), mu0t[k]);
    double want_eff = ct::eval_phi(m, e1, psi0t);
    for (const auto& r : ct::estimate_all(d, eff_est, {name}, opt)) {
      double err = r.ok() ? std::abs(r.estimate - want_eff) : INFINITY;
      std::ostringstream o;
      o << "discrete " << r.estimator << "/" << name << " error " << std::scientific << std::setprecision(2) << err;
      line(err < 1e-10, o.str());
    }
  }

  ct::EstimatingSystem sys;
  Eigen::VectorXd z(5);
  z << 1.0, 2.0, 4.0, 7.0, 11.0;
  sys.rows = z.size();
  sys.theta_hat = Eigen::VectorXd::Constant(1, z.mean());
  sys.labels = {"mean"};
  sys.lambda = [&](ct::Index i, const Eigen::VectorXd& th, Eigen::Ref<Eigen::VectorXd> out) { out(0) = z(i) - th(0); };
  double want = (z.array() - z.mean()).square().sum() / 5.0 / 5.0;
  double got = ct::sandwich(sys).cov(0, 0);
  line(std::abs(got - want) < 1e-8, "sandwich sample-mean identity");
  std::cout << (all ? "selfcheck passed" : "selfcheck FAILED") << "\n";
  return all ? kOk : kFatal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport randomized-trial effect measures to a target population"};
  app.set_version_flag("--version", std::string(ct::kVersion));
  app.require_subcommand(1);
  auto cfg_formatter = std::make_shared<JsonOrIniConfig>();

  EstimateFlags ef;
  auto* est = app.add_subcommand("estimate", "run estimators on a CSV file");
  est->add_option("--data", ef.data, "input CSV")->required();
  est->add_option("--col-s", ef.schema.col_s, "source indicator column")->capture_default_str();
  est->add_option("--col-a", ef.schema.col_a, "treatment column")->capture_default_str();
  est->add_option("--col-y", ef.schema.col_y, "outcome column")->capture_default_str();
  est->add_option("--cols-x", ef.cols_x, "covariate columns (default: all other columns)")->delimiter(',');
  est->add_option("--pi", ef.pi, "randomization probability P(A=1 | S=1)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  est->add_option("--measure,--measures", ef.measures, "effect measures")->delimiter(',')->capture_default_str();
  est->add_option("--estimator,--estimators", ef.estimators, "estimator ids")->delimiter(',')->capture_default_str();
  est->add_option("--boot", ef.boot, "stratified bootstrap replicates (0 disables, else >= 100)")
      ->check(CLI::NonNegativeNumber);
  est->add_option("--seed", ef.seed, "bootstrap and fold seed")->capture_default_str();
  est->add_option("--threads", ef.threads, "worker threads (0 = all cores)")->capture_default_str();
  est->add_option("--out", ef.out, "output directory (default: stdout)");
  est->add_option("--format", ef.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  ef.pipe.add(est);
  est->set_config("--config", "", "key=value or JSON config file; flags take precedence");
  est->config_formatter(cfg_formatter);

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo study on a built-in design");
  sim->add_option("--spec", sf.spec, "design: " + [] {
    std::string s;
    for (const auto& n : ct::spec_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }())->capture_default_str();
  sim->add_option("--spec-file", sf.spec_file, "JSON design overriding a built-in");
  sim->add_option("--n", sf.n, "sample size per replication")->check(CLI::Range(10, 100000000))->capture_default_str();
  sim->add_option("--reps", sf.reps, "replications")->check(CLI::Range(1, 10000000))->capture_default_str();
  sim->add_option("--seed", sf.seed, "master seed")->capture_default_str();
  sim->add_option("--threads", sf.threads, "worker threads (0 = all cores)")->capture_default_str();
  sim->add_option("--truth-draws", sf.truth_draws, "covariate draws for the true effects")
      ->check(CLI::Range(2, 2000000000))
      ->capture_default_str();
  sim->add_option("--measure,--measures", sf.measures, "effect measures")->delimiter(',')->capture_default_str();
  sim->add_option("--estimator,--estimators", sf.estimators, "estimator ids (default depends on the design)")
      ->delimiter(',');
  sim->add_option("--out", sf.out, "output directory for report.json and summary.csv (default: JSON on stdout)");
  sim->add_flag("--dump-replications", sf.dump_replications, "also write replications.csv under --out");
  sf.pipe.add(sim);
  sim->set_config("--config", "", "key=value or JSON config file; flags take precedence");
  sim->config_formatter(cfg_formatter);

  TruthFlags tf;
  auto* tru = app.add_subcommand("truth", "population effects of a design by Monte Carlo");
  tru->add_option("--spec", tf.spec, "design")->capture_default_str();
  tru->add_option("--spec-file", tf.spec_file, "JSON design overriding a built-in");
  tru->add_option("--measure,--measures", tf.measures, "effect measures")->delimiter(',')->capture_default_str();
  tru->add_option("--draws", tf.draws, "covariate draws (>= 1e6)")->capture_default_str();
  tru->add_option("--seed", tf.seed, "seed")->capture_default_str();
  tru->add_option("--out", tf.out, "output directory (default: stdout)");
  tru->set_config("--config", "", "key=value or JSON config file; flags take precedence");
  tru->config_formatter(cfg_formatter);

  SelfcheckFlags cf;
  auto* chk = app.add_subcommand("selfcheck", "measure registry and discrete-population checks");
  chk->add_option("--points", cf.points, "domain points per measure")->check(CLI::PositiveNumber)->capture_default_str();
  chk->add_option("--seed", cf.seed, "seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << "ctransport: " << e.what() << "\n";
    return kFile;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*est) return run_estimate(ef);
    if (*sim) return run_simulate(sf);
    if (*tru) return run_truth(tf);
    if (*chk) return run_selfcheck(cf);
  } catch (const ct::FileError& e) {
    std::cerr << "ctransport: " << e.what() << "\n";
    return kFile;
  } catch (const ct::LookupError& e) {
    std::cerr << "ctransport: " << e.what() << "\n";
    return kUsage;
  } catch (const ct::Error& e) {
    std::cerr << "ctransport: " << e.kind() << ": " << e.what() << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    std::cerr << "ctransport: " << e.what() << "\n";
    return kFatal;
  }
  return kUsage;
}
