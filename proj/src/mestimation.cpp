#include "causal_transport/mestimation.hpp"

#include <cmath>
#include <sstream>

#include "causal_transport/errors.hpp"

namespace ct {

Eigen::VectorXd EstimatingSystem::mean_lambda(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim()), buf(dim());
  for (Eigen::Index i = 0; i < rows; ++i) {
    buf.setZero();
    lambda(i, theta, buf);
    acc += buf;
  }
  return acc / double(rows);
}

SandwichResult sandwich(const EstimatingSystem& sys, double root_tol) {
  const Eigen::Index k = sys.dim();
  if (sys.rows <= 0 || k == 0) throw NumericalError("sandwich: empty system");
  SandwichResult res;
  Eigen::VectorXd root = sys.mean_lambda(sys.theta_hat);
  res.root_norm = root.lpNorm<Eigen::Infinity>();
  if (!(res.root_norm < root_tol)) {
    Eigen::Index worst;
    root.cwiseAbs().maxCoeff(&worst);
    std::ostringstream o;
    o << "sandwich: supplied theta is not a root, |mean lambda|_inf = " << res.root_norm;
    if (worst < Eigen::Index(sys.labels.size())) o << " at '" << sys.labels[worst] << "'";
    throw NumericalError(o.str());
  }

  res.a.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double h = 1e-6 * (1.0 + std::abs(sys.theta_hat(j)));
    Eigen::VectorXd tp = sys.theta_hat, tm = sys.theta_hat;
    tp(j) += h;
    tm(j) -= h;
    res.a.col(j) = (sys.mean_lambda(tp) - sys.mean_lambda(tm)) / (2.0 * h);
  }

  res.b = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd buf(k);
  for (Eigen::Index i = 0; i < sys.rows; ++i) {
    buf.setZero();
    sys.lambda(i, sys.theta_hat, buf);
    res.b.selfadjointView<Eigen::Lower>().rankUpdate(buf);
  }
  res.b = res.b.selfadjointView<Eigen::Lower>();
  res.b /= double(sys.rows);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(res.a);
  const auto& sv = svd.singularValues();
  res.condition = sv(k - 1) > 0 ? sv(0) / sv(k - 1) : std::numeric_limits<double>::infinity();
  if (!(res.condition <= 1e10)) {
    std::ostringstream o;
    o << "sandwich: Jacobian is singular (condition number " << res.condition
      << "); check covariate collinearity or lack of overlap";
    throw SingularError(o.str());
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(res.a);
  Eigen::MatrixXd ainv_b = qr.solve(res.b);                      // A^-1 B
  Eigen::MatrixXd cov = qr.solve(ainv_b.transpose()).transpose();  // A^-1 B A^-T
  cov /= double(sys.rows);
  res.cov = 0.5 * (cov + cov.transpose());
  return res;
}

double delta_method(const Eigen::MatrixXd& cov, const Eigen::VectorXd& grad) {
  if (cov.rows() != grad.size() || cov.cols() != grad.size())
    throw NumericalError("delta method: dimension mismatch");
  double v = grad.dot(cov * grad);
  if (v < -1e-12) throw NumericalError("delta method: negative variance " + std::to_string(v));
  return std::max(v, 0.0);
}

}  // namespace ct
