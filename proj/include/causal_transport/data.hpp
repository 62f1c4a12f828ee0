#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

namespace ct {

using Index = Eigen::Index;

/// Pooled trial + target sample. a = -1 and y = NaN mark unobserved cells.
struct StudyData {
  Eigen::VectorXi s;
  Eigen::MatrixXd x;
  Eigen::VectorXi a;
  Eigen::VectorXd y;
  double pi = 0.5;
  std::vector<std::string> covariate_names;

  /// Validates and returns the data; throws ValidationError naming the row.
  static StudyData create(Eigen::VectorXi s, Eigen::MatrixXd x, Eigen::VectorXi a, Eigen::VectorXd y,
                          double pi = 0.5, std::vector<std::string> names = {});
  void validate() const;

  Index N() const { return s.size(); }
  Index n() const { return s.sum(); }
  Index m() const { return N() - n(); }
  Index p() const { return x.cols(); }
  double alpha_hat() const { return double(n()) / double(N()); }
  bool is_target_control(Index i) const { return s(i) == 0 && a(i) == 0 && !std::isnan(y(i)); }
  Index target_control_count() const;
  bool has_target_controls() const { return target_control_count() > 0; }

  /// Rows in the given order (duplicates allowed); no re-validation.
  StudyData rows(const std::vector<Index>& idx) const;
};

/// [1, X] for the given covariate matrix.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x);

struct CsvSchema {
  std::string col_s = "S";
  std::string col_a = "A";
  std::string col_y = "Y";
  std::vector<std::string> cols_x;
};

StudyData load_csv(const std::string& path, const CsvSchema& schema, double pi = 0.5);
StudyData parse_csv(std::istream& in, const CsvSchema& schema, double pi = 0.5);
void write_csv(const StudyData& d, const std::string& path, const CsvSchema& schema);
void write_csv(const StudyData& d, std::ostream& out, const CsvSchema& schema);

struct DataProfile {
  Index N = 0, n = 0, m = 0, n1 = 0, n0 = 0, target_controls = 0;
  double alpha_hat = 0;
  Eigen::VectorXd mean_source, sd_source, mean_target, sd_target;
  double outcome_mean_treated = 0, outcome_mean_control = 0;
  double outcome_mean_target_control = 0;
  bool binary_outcome = false;
};

DataProfile profile(const StudyData& d);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace ct
