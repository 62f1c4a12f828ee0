#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "causal_transport/data.hpp"
#include "causal_transport/report.hpp"
#include "causal_transport/simlab.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace ct;

namespace {

struct Run {
  int code;
  std::string out;
};

// stdout and stderr merged.
Run run(const std::string& args) {
  std::string cmd = std::string(CT_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string out;
  char buf[4096];
  size_t k;
  while ((k = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, k);
  int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path scratch() {
  auto dir = fs::temp_directory_path() / ("ctransport_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string write_study(const std::string& spec, const std::string& file) {
  auto sd = generate(builtin_spec(spec), 600, 4);
  CsvSchema sc;
  sc.cols_x = sd.data.covariate_names;
  auto path = (scratch() / file).string();
  write_csv(sd.data, path, sc);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace

TEST_CASE("estimate") {
  auto csv = write_study("appE_linear", "appe.csv");
  auto r = run("estimate --data " + csv + " --measures RD,RR --estimators wht,tG,ee --threads 1");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  REQUIRE(j["results"].size() == 6);
  CHECK(j["results"][0]["estimator"] == "wht");
  CHECK(j["results"][2]["estimator"] == "tG");
  CHECK(j["results"][5]["se"].is_number());

  r = run("estimate --data " + csv + " --estimators effect/ee --threads 1");
  CHECK(r.code == 2);
  CHECK(r.out.find("capability") != std::string::npos);
  CHECK(r.out.find("target-control") != std::string::npos);

  r = run("estimate --data " + csv + " --estimators ee --boot 200 --seed 3 --threads 1");
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["results"][0]["diagnostics"]["ci_method"] == "bootstrap_percentile");
  CHECK(j["results"][0]["diagnostics"]["bootstrap_replicates"] == 200);

  r = run("estimate --data " + csv + " --estimators ee --format csv --threads 1");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("estimator,measure,estimate", 0) == 0);
}

TEST_CASE("effect estimators with target controls") {
  auto csv = write_study("exp2_or", "or.csv");
  auto r = run("estimate --data " + csv + " --measures OR --estimators effect/tgamma,effect/ee,effect/os-at-EE --link logit");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["results"][2]["estimator"] == "effect/os:ee");
  CHECK(j["results"][1]["estimate"].get<double>() ==
        doctest::Approx(j["results"][2]["estimate"].get<double>()).epsilon(1e-12));
}

TEST_CASE("usage and file errors") {
  CHECK(run("estimate --data /nonexistent.csv").code == 66);
  CHECK(run("bogus").code == 64);
  CHECK(run("estimate").code == 64);
  auto csv = write_study("appE_linear", "appe2.csv");
  auto r = run("estimate --data " + csv + " --measures XYZ");
  CHECK(r.code == 64);
  CHECK(r.out.find("RD") != std::string::npos);
  CHECK(run("--version").code == 0);
}

TEST_CASE("simulate and truth") {
  auto dir = scratch() / "sim";
  auto r = run("simulate --spec appE_linear --n 300 --reps 5 --truth-draws 1000000 --estimators wht,ee --measures RD --threads 1 --out " +
               dir.string());
  REQUIRE(r.code == 0);
  auto j = json::parse(slurp(dir / "report.json"));
  CHECK(j["cells"].size() == 2);
  CHECK(fs::exists(dir / "summary.csv"));

  r = run("simulate --spec appE_linear --n 300 --reps 2 --truth-draws 1000000 --estimators effect/ee");
  CHECK(r.code != 0);
  CHECK(r.out.find("target-control") != std::string::npos);

  r = run("truth --spec exp1 --measures RD,OR --draws 1000000");
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j.dump().find("tau_t") != std::string::npos);
}

TEST_CASE("selfcheck") {
  auto r = run("selfcheck --points 200");
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("remove scratch files") { fs::remove_all(scratch()); }
