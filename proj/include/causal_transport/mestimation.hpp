#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace ct {

/// Stacked estimating equations lambda(Z_i, theta), i = 0..rows-1.
struct EstimatingSystem {
  Eigen::Index rows = 0;
  Eigen::VectorXd theta_hat;
  std::vector<std::string> labels;
  std::function<void(Eigen::Index i, const Eigen::VectorXd& theta, Eigen::Ref<Eigen::VectorXd> out)> lambda;

  Eigen::Index dim() const { return theta_hat.size(); }
  /// (1/N) sum_i lambda(Z_i, theta)
  Eigen::VectorXd mean_lambda(const Eigen::VectorXd& theta) const;
};

struct SandwichResult {
  Eigen::MatrixXd cov;  // covariance of theta_hat, already divided by N
  Eigen::MatrixXd a, b;
  double condition = 0;
  double root_norm = 0;
};

/// A^-1 B A^-T / N with A from central differences (step 1e-6 (1 + |theta_j|)).
/// Throws NumericalError when the root condition fails and SingularError when
/// cond(A) > 1e10.
SandwichResult sandwich(const EstimatingSystem& sys, double root_tol = 1e-6);

/// grad' cov grad; throws NumericalError when it is below -1e-12.
double delta_method(const Eigen::MatrixXd& cov, const Eigen::VectorXd& grad);

}  // namespace ct
