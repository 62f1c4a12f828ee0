#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "causal_transport/errors.hpp"
#include "causal_transport/measures.hpp"
#include "causal_transport/parallel.hpp"
#include "causal_transport/pipeline.hpp"
#include "causal_transport/simlab.hpp"
#include "causal_transport/version.hpp"

namespace py = pybind11;
using namespace ct;

namespace {

// Reports travel as JSON text; the Python side decodes them.
std::string estimate_json(const Eigen::VectorXi& s, const Eigen::MatrixXd& x, const Eigen::VectorXi& a,
                          const Eigen::VectorXd& y, const std::vector<std::string>& estimators,
                          const std::vector<std::string>& measures, double pi, const std::string& link,
                          bool sandwich, int folds, std::uint64_t seed) {
  auto d = StudyData::create(s, x, a, y, pi);
  PipelineOptions opt;
  opt.nuisance.link = parse_link(link);
  opt.sandwich = sandwich;
  opt.folds = folds;
  opt.fold_seed = seed;
  std::vector<EstimateReport> out;
  {
    py::gil_scoped_release nogil;
    out = estimate_all(d, estimators, measures, opt);
  }
  json j = json::array();
  for (const auto& r : out) j.push_back(to_json(r));
  return j.dump();
}

std::string simulate_json(const std::string& spec, Index n, int reps, std::uint64_t seed,
                          const std::vector<std::string>& estimators, const std::vector<std::string>& measures,
                          Index truth_draws, int threads, bool sandwich) {
  auto sp = builtin_spec(spec);
  StudyConfig cfg;
  cfg.N = n;
  cfg.R = reps;
  cfg.seed = seed;
  cfg.estimators = estimators;
  cfg.measures = measures;
  cfg.truth_draws = truth_draws;
  cfg.threads = threads;
  cfg.pipeline.sandwich = sandwich;
  cfg.pipeline.nuisance.link = sp.fit_link;
  py::gil_scoped_release nogil;
  return report_to_json(run_study(sp, cfg)).dump();
}

py::dict truth(const std::string& spec, const std::string& measure, Index draws, std::uint64_t seed) {
  auto t = true_effects(builtin_spec(spec), get_measure(measure), draws, seed);
  py::dict d;
  d["measure"] = t.measure;
  d["tau_t"] = t.tau_t;
  d["tau_s"] = t.tau_s;
  d["se_t"] = t.se_t;
  d["se_s"] = t.se_s;
  d["draws"] = t.draws;
  return d;
}

py::dict generate_py(const std::string& spec, Index n, std::uint64_t seed) {
  auto sd = generate(builtin_spec(spec), n, seed);
  py::dict d;
  d["S"] = sd.data.s;
  d["X"] = sd.data.x;
  d["A"] = sd.data.a;
  d["Y"] = sd.data.y;
  d["y0"] = sd.y0;
  d["y1"] = sd.y1;
  d["pi"] = sd.data.pi;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transporting treatment effects across populations";
  m.attr("__version__") = kVersion;

  static py::exception<Error> base(m, "CausalTransportError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(base, (std::string(e.kind()) + ": " + e.what()).c_str());
    }
  });

  m.def("measure_names", &measure_names);
  m.def("phi", [](const std::string& name, double p1, double p0) { return eval_phi(get_measure(name), p1, p0); },
        py::arg("measure"), py::arg("psi1"), py::arg("psi0"));
  m.def("gamma", [](const std::string& name, double tau, double p0) { return eval_gamma(get_measure(name), tau, p0); },
        py::arg("measure"), py::arg("tau"), py::arg("psi0"));
  m.def("estimator_ids", &estimator_ids);
  m.def("spec_names", &spec_names);
  m.def("estimate_json", &estimate_json, py::arg("s"), py::arg("x"), py::arg("a"), py::arg("y"),
        py::arg("estimators"), py::arg("measures"), py::arg("pi") = 0.5, py::arg("link") = "auto",
        py::arg("sandwich") = true, py::arg("folds") = 1, py::arg("seed") = 1);
  m.def("simulate_json", &simulate_json, py::arg("spec"), py::arg("n"), py::arg("reps"), py::arg("seed") = 1,
        py::arg("estimators") = std::vector<std::string>{"wht", "tG", "ee"},
        py::arg("measures") = std::vector<std::string>{"RD", "RR", "OR"}, py::arg("truth_draws") = 1000000,
        py::arg("threads") = 1, py::arg("sandwich") = false);
  m.def("truth", &truth, py::arg("spec"), py::arg("measure"), py::arg("draws") = 1000000,
        py::arg("seed") = 20240607);
  m.def("generate", &generate_py, py::arg("spec"), py::arg("n"), py::arg("seed") = 1);
}
