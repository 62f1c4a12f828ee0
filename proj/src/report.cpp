#include "causal_transport/report.hpp"

#include <cmath>

namespace ct {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const EstimateReport& r) {
  json j;
  j["measure"] = r.measure;
  j["estimator"] = r.estimator;
  j["estimate"] = number_or_null(r.estimate);
  j["se"] = r.std_error ? number_or_null(*r.std_error) : json(nullptr);
  j["ci"] = r.ci ? json::array({number_or_null((*r.ci)[0]), number_or_null((*r.ci)[1])}) : json(nullptr);
  j["level"] = r.level;
  j["n"] = r.n;
  j["m"] = r.m;
  j["diagnostics"] = r.diagnostics;
  if (r.error) {
    j["error"] = *r.error;
    j["error_kind"] = r.error_kind;
  }
  return j;
}

}  // namespace ct
