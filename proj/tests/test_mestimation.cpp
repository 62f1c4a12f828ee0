#include <random>

#include "causal_transport/errors.hpp"
#include "causal_transport/mestimation.hpp"
#include "causal_transport/nuisance.hpp"
#include "doctest.h"

using namespace ct;

namespace {

EstimatingSystem mean_system(const Eigen::VectorXd& z) {
  EstimatingSystem sys;
  sys.rows = z.size();
  sys.theta_hat = Eigen::VectorXd::Constant(1, z.mean());
  sys.labels = {"mean"};
  sys.lambda = [z](Index i, const Eigen::VectorXd& th, Eigen::Ref<Eigen::VectorXd> out) { out(0) = z(i) - th(0); };
  return sys;
}

// Logistic design with covariates shifted by 0.4 between the two classes.
void logistic_sample(Index N, std::uint64_t seed, Eigen::MatrixXd& v, Eigen::VectorXd& s) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::bernoulli_distribution sel(0.3);
  v.resize(N, 3);
  s.resize(N);
  for (Index i = 0; i < N; ++i) {
    s(i) = sel(rng);
    v(i, 0) = 1.0;
    v(i, 1) = g(rng) + (s(i) ? 0.0 : 0.4);
    v(i, 2) = g(rng) + (s(i) ? 0.0 : -0.4);
  }
}

}  // namespace

TEST_CASE("sample-mean system gives the sample variance over N") {
  Eigen::VectorXd z(6);
  z << 1.5, -2.0, 0.25, 4.0, 3.0, -1.0;
  auto res = sandwich(mean_system(z));
  double var = (z.array() - z.mean()).square().mean();
  CHECK(res.cov(0, 0) == doctest::Approx(var / 6.0).epsilon(1e-9));
  CHECK(res.root_norm < 1e-12);
}

TEST_CASE("root condition is enforced") {
  Eigen::VectorXd z(4);
  z << 1, 2, 3, 4;
  auto sys = mean_system(z);
  sys.theta_hat(0) += 0.1;
  CHECK_THROWS_AS(sandwich(sys), NumericalError);
}

TEST_CASE("singular Jacobian") {
  Eigen::VectorXd z(5);
  z << 1, 2, 3, 4, 5;
  EstimatingSystem sys;
  sys.rows = 5;
  sys.theta_hat = Eigen::Vector2d(3.0, 0.0);
  sys.lambda = [z](Index i, const Eigen::VectorXd& th, Eigen::Ref<Eigen::VectorXd> out) {
    out(0) = z(i) - th(0);
    out(1) = 2 * (z(i) - th(0));
  };
  CHECK_THROWS_AS(sandwich(sys), SingularError);
}

TEST_CASE("logistic score sandwich matches inverse Fisher information") {
  Eigen::MatrixXd v;
  Eigen::VectorXd s;
  logistic_sample(10000, 8, v, s);
  auto fit = fit_logistic(v, s);
  EstimatingSystem sys;
  sys.rows = v.rows();
  sys.theta_hat = fit.beta;
  sys.lambda = [&](Index i, const Eigen::VectorXd& b, Eigen::Ref<Eigen::VectorXd> out) {
    out = v.row(i).transpose() * (s(i) - sigmoid(v.row(i).dot(b)));
  };
  auto res = sandwich(sys);
  Eigen::VectorXd p = (v * fit.beta).unaryExpr([](double e) { return sigmoid(e); });
  Eigen::VectorXd w = p.cwiseProduct(Eigen::VectorXd::Ones(p.size()) - p);
  Eigen::MatrixXd fisher_inv = (v.transpose() * w.asDiagonal() * v).inverse();
  for (int j = 0; j < 3; ++j) CHECK(res.cov(j, j) == doctest::Approx(fisher_inv(j, j)).epsilon(0.10));

  // Q = E[sigma(1 - sigma) V V'] against (1 - alpha) E_T[sigma V V'].
  Eigen::MatrixXd q = (v.transpose() * w.asDiagonal() * v) / double(v.rows());
  Eigen::MatrixXd qt = Eigen::MatrixXd::Zero(3, 3);
  double m = 0;
  for (Index i = 0; i < v.rows(); ++i)
    if (s(i) == 0) {
      qt += p(i) * v.row(i).transpose() * v.row(i);
      ++m;
    }
  qt *= (1.0 - s.mean()) / m;
  CHECK((q - qt).cwiseAbs().maxCoeff() < 0.05 * q.cwiseAbs().maxCoeff());
}

TEST_CASE("returned covariance is symmetric and PSD") {
  Eigen::MatrixXd v;
  Eigen::VectorXd s;
  logistic_sample(3000, 12, v, s);
  auto fit = fit_logistic(v, s);
  EstimatingSystem sys;
  sys.rows = v.rows();
  sys.theta_hat = fit.beta;
  sys.lambda = [&](Index i, const Eigen::VectorXd& b, Eigen::Ref<Eigen::VectorXd> out) {
    out = v.row(i).transpose() * (s(i) - sigmoid(v.row(i).dot(b)));
  };
  auto res = sandwich(sys);
  CHECK((res.cov - res.cov.transpose()).cwiseAbs().maxCoeff() < 1e-8 * res.cov.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.cov);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("scaling one equation leaves the variances unchanged") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::VectorXd z(400), w(400);
  for (int i = 0; i < 400; ++i) z(i) = 3 + g(rng), w(i) = 2 * z(i) + g(rng);
  double c0 = 0, c1 = 0;
  for (double scale : {1.0, 7.5}) {
    EstimatingSystem sys;
    sys.rows = 400;
    sys.theta_hat = Eigen::Vector2d(z.mean(), w.mean() / z.mean());
    sys.lambda = [&, scale](Index i, const Eigen::VectorXd& th, Eigen::Ref<Eigen::VectorXd> out) {
      out(0) = z(i) - th(0);
      out(1) = scale * (w(i) - th(1) * th(0));
    };
    auto res = sandwich(sys);
    if (scale == 1.0) {
      c0 = res.cov(0, 0), c1 = res.cov(1, 1);
    } else {
      CHECK(res.cov(0, 0) == doctest::Approx(c0).epsilon(1e-6));
      CHECK(res.cov(1, 1) == doctest::Approx(c1).epsilon(1e-6));
    }
  }
}

TEST_CASE("delta method") {
  CHECK(delta_method(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 0)) == doctest::Approx(1.0));
  CHECK(delta_method(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0, 0)) == 0.0);
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(delta_method(bad, Eigen::Vector2d(1, -1)), NumericalError);

  // Oracle wHT variance for the risk difference and risk ratio in closed form.
  double alpha = 0.3, pi = 0.5, psi1 = 0.55, psi0 = 0.3, e1 = 0.7, e0 = 0.25;
  double v1 = (e1 / pi - psi1 * psi1) / alpha, v0 = (e0 / (1 - pi) - psi0 * psi0) / alpha;
  Eigen::Matrix2d cov;
  cov << v1, -psi1 * psi0 / alpha, -psi1 * psi0 / alpha, v0;
  double rd = (e1 / pi + e0 / (1 - pi) - (psi1 - psi0) * (psi1 - psi0)) / alpha;
  CHECK(delta_method(cov, Eigen::Vector2d(1, -1)) == doctest::Approx(rd).epsilon(1e-12));
  double tau = psi1 / psi0;
  double rr = tau * tau / alpha * (e1 / (pi * psi1 * psi1) + e0 / ((1 - pi) * psi0 * psi0));
  CHECK(delta_method(cov, Eigen::Vector2d(1 / psi0, -psi1 / (psi0 * psi0))) == doctest::Approx(rr).epsilon(1e-12));
}
