#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>

#include "json.hpp"

namespace ct {

using json = nlohmann::ordered_json;

struct EstimateReport {
  std::string measure;
  std::string estimator;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> std_error;
  std::optional<std::array<double, 2>> ci;
  double level = 0.95;
  long long n = 0, m = 0;
  json diagnostics = json::object();
  // Set when the cell failed; estimate is NaN then.
  std::optional<std::string> error;
  std::string error_kind;

  bool ok() const { return !error.has_value(); }
};

json to_json(const EstimateReport& r);
/// Finite doubles as numbers, everything else as null.
json number_or_null(double v);

}  // namespace ct
