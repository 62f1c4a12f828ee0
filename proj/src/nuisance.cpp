#include "causal_transport/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "causal_transport/errors.hpp"

namespace ct {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log1pexp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double l = 0;
  for (Index i = 0; i < eta.size(); ++i) l += y(i) * eta(i) - log1pexp(eta(i));
  return l;
}

void check_rank(const Eigen::MatrixXd& v, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  qr.setThreshold(1e-10);
  if (qr.rank() < v.cols())
    throw SingularError(std::string(what) + ": design has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(v.cols()) + " columns; check for collinear or constant covariates");
}

std::string fmt_trace(const std::vector<double>& t) {
  std::ostringstream o;
  o.precision(3);
  for (size_t k = 0; k < t.size(); ++k) o << (k ? ", " : "") << t[k];
  return o.str();
}

Surface fit_surface(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Link link, const char* what) {
  Eigen::MatrixXd v = design_matrix(x);
  if (v.rows() <= v.cols())
    throw SingularError(std::string(what) + ": " + std::to_string(v.rows()) + " rows for " +
                        std::to_string(v.cols()) + " coefficients (under-determined)");
  Surface s;
  s.link = link;
  if (link == Link::Identity) {
    s.beta = fit_ols(v, y);
  } else {
    check_rank(v, what);
    auto f = fit_logistic(v, y);
    s.beta = f.beta;
  }
  return s;
}

void select_rows(const StudyData& d, const std::function<bool(Index)>& keep, Eigen::MatrixXd& x,
                 Eigen::VectorXd& y) {
  std::vector<Index> idx;
  for (Index i = 0; i < d.N(); ++i)
    if (keep(i)) idx.push_back(i);
  x.resize(Index(idx.size()), d.p());
  y.resize(Index(idx.size()));
  for (Index r = 0; r < Index(idx.size()); ++r) {
    x.row(r) = d.x.row(idx[r]);
    y(r) = d.y(idx[r]);
  }
}

}  // namespace

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

LinkChoice parse_link(const std::string& s) {
  if (s == "auto") return LinkChoice::Auto;
  if (s == "identity") return LinkChoice::Identity;
  if (s == "logit") return LinkChoice::Logit;
  throw LookupError("unknown link '" + s + "'; valid: auto, identity, logit");
}

const char* link_name(Link l) { return l == Link::Identity ? "identity" : "logit"; }

Link resolve_link(LinkChoice c, const StudyData& d) {
  if (c == LinkChoice::Identity) return Link::Identity;
  if (c == LinkChoice::Logit) return Link::Logit;
  for (Index i = 0; i < d.N(); ++i)
    if (d.s(i) == 1 && d.y(i) != 0.0 && d.y(i) != 1.0) return Link::Identity;
  return Link::Logit;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& v, const Eigen::VectorXd& y, const LogisticOptions& opt) {
  const Index k = v.cols();
  LogisticFit fit;
  fit.beta = Eigen::VectorXd::Zero(k);
  double ybar = y.mean();
  if (ybar > 0 && ybar < 1) fit.beta(0) = std::log(ybar / (1 - ybar));
  Eigen::VectorXd eta = v * fit.beta;
  double ll = loglik(eta, y);
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd mu = eta.unaryExpr([](double e) { return sigmoid(e); });
    Eigen::VectorXd g = v.transpose() * (y - mu);
    Eigen::VectorXd w = mu.cwiseProduct(Eigen::VectorXd::Ones(mu.size()) - mu);
    Eigen::MatrixXd h = v.transpose() * w.asDiagonal() * v;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
      throw SingularError("logistic regression: singular Hessian; check covariate collinearity");
    Eigen::VectorXd step = ldlt.solve(g);
    fit.grad_norm = g.lpNorm<Eigen::Infinity>();
    fit.trace.push_back(fit.grad_norm);
    fit.iterations = it;
    bool small_step = step.lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + fit.beta.lpNorm<Eigen::Infinity>());
    if (fit.grad_norm < opt.tol && small_step) {
      fit.beta += step;
      fit.converged = true;
      return fit;
    }
    const bool saturated = fit.grad_norm < opt.tol && eta.cwiseAbs().maxCoeff() > 30.0;
    if (fit.beta.lpNorm<Eigen::Infinity>() > 50.0 || saturated)
      throw SeparationError("logistic regression diverges (|beta|_inf > 50 or saturated fit without convergence): "
                            "outcome is separated by the covariates; gradient trace: " +
                            fmt_trace(fit.trace));
    double t = 1.0;
    Eigen::VectorXd cand, eta_c;
    double ll_c = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      cand = fit.beta + t * step;
      eta_c = v * cand;
      ll_c = loglik(eta_c, y);
      if (ll_c >= ll - 1e-12 * std::abs(ll)) break;
      t *= 0.5;
    }
    fit.beta = cand;
    eta = eta_c;
    ll = ll_c;
  }
  throw ConvergenceError("logistic regression did not converge in " + std::to_string(opt.max_iter) +
                         " iterations; gradient trace: " + fmt_trace(fit.trace));
}

LogisticFit fit_selection_logistic(const StudyData& d, double tol, int max_iter) {
  if (d.n() == 0 || d.m() == 0) throw ValidationError("selection model needs both source and target rows");
  Eigen::MatrixXd v = design_matrix(d.x);
  check_rank(v, "selection model");
  return fit_logistic(v, d.s.cast<double>(), {tol, max_iter});
}

Eigen::VectorXd fit_ols(const Eigen::MatrixXd& v, const Eigen::VectorXd& y) {
  if (v.rows() <= v.cols())
    throw SingularError("least squares: " + std::to_string(v.rows()) + " rows for " + std::to_string(v.cols()) +
                        " coefficients (under-determined)");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  qr.setThreshold(1e-10);
  if (qr.rank() < v.cols())
    throw SingularError("least squares: rank-deficient design (rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(v.cols()) + "); check for collinear or constant covariates");
  return qr.solve(y);
}

double Surface::operator()(const RowRef& x) const {
  if (custom) return custom(x);
  double eta = beta(0) + x.dot(beta.tail(beta.size() - 1));
  return link == Link::Identity ? eta : sigmoid(eta);
}

Eigen::VectorXd Surface::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  if (custom) {
    for (Index i = 0; i < x.rows(); ++i) out(i) = custom(x.row(i));
    return out;
  }
  out = (x * beta.tail(beta.size() - 1)).array() + beta(0);
  if (link == Link::Logit) out = out.unaryExpr([](double e) { return sigmoid(e); });
  return out;
}

Surface Surface::constant(double c) {
  Surface s;
  s.custom = [c](const RowRef&) { return c; };
  return s;
}

Surface Surface::function(RowFn f) {
  Surface s;
  s.custom = std::move(f);
  return s;
}

OutcomeFit fit_outcomes(const StudyData& d, Link link) {
  OutcomeFit of;
  of.link = link;
  for (int a = 0; a <= 1; ++a) {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    select_rows(d, [&](Index i) { return d.s(i) == 1 && d.a(i) == a; }, x, y);
    if (x.rows() == 0) throw ValidationError("outcome model: source arm " + std::to_string(a) + " is empty");
    Surface s = fit_surface(x, y, link, a == 1 ? "outcome model (arm 1)" : "outcome model (arm 0)");
    (a == 1 ? of.mu1 : of.mu0) = std::move(s);
  }
  return of;
}

Surface fit_mu0_target(const StudyData& d, Link link) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  select_rows(d, [&](Index i) { return d.is_target_control(i); }, x, y);
  if (x.rows() == 0)
    throw CapabilityError("no target-control outcomes: effect-measure estimators are unavailable; "
                          "use the mean-exchangeability estimators (wht, neyman, wG, tG, ee, os)");
  return fit_surface(x, y, link, "target control outcome model");
}

double DensityRatio::sigma(const RowRef& x) const { return sigmoid(beta(0) + x.dot(beta.tail(beta.size() - 1))); }

double DensityRatio::operator()(const RowRef& x) const {
  if (custom) return custom(x);
  double s = sigma(x);
  if (clip > 0) {
    s = std::clamp(s, clip, 1.0 - clip);
  } else if (s < 1e-12) {
    std::ostringstream o;
    o << "overlap violation: P(S=1|x) = " << s << " < 1e-12 at x = (";
    for (Index j = 0; j < x.size(); ++j) o << (j ? ", " : "") << x(j);
    o << ")";
    throw OverlapError(o.str());
  }
  return scale * (1.0 - s) / s;
}

Eigen::VectorXd DensityRatio::evaluate(const StudyData& d, bool source_only, Index* clipped) const {
  Eigen::VectorXd r = Eigen::VectorXd::Constant(d.N(), kNaN);
  Index c = 0;
  for (Index i = 0; i < d.N(); ++i) {
    if (source_only && d.s(i) != 1) continue;
    if (!custom && clip > 0) {
      double s = sigma(d.x.row(i));
      c += (s < clip || s > 1.0 - clip);
    }
    r(i) = (*this)(d.x.row(i));
  }
  if (clipped) *clipped = c;
  return r;
}

DensityRatio DensityRatio::constant(double c) {
  DensityRatio r;
  r.custom = [c](const RowRef&) { return c; };
  return r;
}

DensityRatio DensityRatio::function(RowFn f) {
  DensityRatio r;
  r.custom = std::move(f);
  return r;
}

DensityRatio density_ratio(const LogisticFit& fit, const StudyData& d, double clip) {
  if (!fit.converged) throw ConvergenceError("density ratio requires a converged selection model");
  if (d.n() == 0 || d.m() == 0) throw ValidationError("density ratio needs n > 0 and N - n > 0");
  if (clip < 0 || clip >= 0.5) throw ValidationError("ratio clip must lie in [0, 0.5)");
  DensityRatio r;
  r.beta = fit.beta;
  r.scale = double(d.n()) / double(d.m());
  r.clip = clip;
  return r;
}

Cate plug_in_cate(const EffectMeasure& m, const OutcomeFit& mu) {
  return [&m, mu](const RowRef& x) {
    double m1 = mu.mu1(x), m0 = mu.mu0(x);
    try {
      return eval_phi(m, m1, m0);
    } catch (const DomainError& e) {
      std::ostringstream o;
      o << e.what() << " at x = (";
      for (Index j = 0; j < x.size(); ++j) o << (j ? ", " : "") << x(j);
      o << ")";
      throw DomainError(o.str());
    }
  };
}

std::vector<Fold> crossfit_split(const StudyData& d, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("cross-fitting needs k >= 2");
  std::map<std::pair<int, int>, std::vector<Index>> strata;
  for (Index i = 0; i < d.N(); ++i) strata[{d.s(i), d.a(i)}].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(d.N());
  Index counter = 0;
  for (auto& [key, idx] : strata) {
    if (Index(idx.size()) < k)
      throw ValidationError("cross-fitting: stratum (s=" + std::to_string(key.first) +
                            ", a=" + std::to_string(key.second) + ") has " + std::to_string(idx.size()) +
                            " rows, fewer than k=" + std::to_string(k));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (Index i : idx) fold_of[i] = int(counter++ % k);
  }
  std::vector<Fold> folds(k);
  for (Index i = 0; i < d.N(); ++i)
    for (int f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].eval : folds[f].train).push_back(i);
  return folds;
}

NuisanceFit fit_nuisances(const StudyData& d, const NuisanceOptions& opt) {
  NuisanceFit nf;
  nf.alpha_hat = d.alpha_hat();
  nf.pi = d.pi;
  if (opt.ratio_override) {
    nf.ratio = *opt.ratio_override;
  } else {
    nf.selection = fit_selection_logistic(d, opt.tol, opt.max_iter);
    nf.ratio = density_ratio(*nf.selection, d, opt.ratio_clip);
  }
  Link link = resolve_link(opt.link, d);
  nf.mu_s = opt.outcome_override ? *opt.outcome_override : fit_outcomes(d, link);
  if (opt.fit_target && d.has_target_controls()) nf.mu0_t = fit_mu0_target(d, link);
  return nf;
}

NuisanceValues evaluate_nuisances(const NuisanceFit& nf, const StudyData& d) {
  NuisanceValues v;
  v.alpha_hat = d.alpha_hat();
  v.pi = d.pi;
  v.ratio = nf.ratio.evaluate(d, true, &v.clipped);
  v.mu1 = nf.mu_s.mu1.predict(d.x);
  v.mu0 = nf.mu_s.mu0.predict(d.x);
  if (nf.mu0_t) v.mu0_t = nf.mu0_t->predict(d.x);
  return v;
}

NuisanceValues crossfit_nuisances(const StudyData& d, const NuisanceOptions& opt, int k, std::uint64_t seed) {
  if (k <= 1) return evaluate_nuisances(fit_nuisances(d, opt), d);
  auto folds = crossfit_split(d, k, seed);
  NuisanceValues v;
  v.alpha_hat = d.alpha_hat();
  v.pi = d.pi;
  v.folds = k;
  v.ratio = Eigen::VectorXd::Constant(d.N(), kNaN);
  v.mu1.resize(d.N());
  v.mu0.resize(d.N());
  bool target = opt.fit_target && d.has_target_controls();
  if (target) v.mu0_t.resize(d.N());
  for (const auto& f : folds) {
    StudyData train = d.rows(f.train), eval = d.rows(f.eval);
    NuisanceOptions o = opt;
    o.fit_target = target;
    NuisanceFit nf = fit_nuisances(train, o);
    Index c = 0;
    Eigen::VectorXd r = nf.ratio.evaluate(eval, true, &c);
    v.clipped += c;
    Eigen::VectorXd m1 = nf.mu_s.mu1.predict(eval.x), m0 = nf.mu_s.mu0.predict(eval.x);
    Eigen::VectorXd mt;
    if (target) mt = nf.mu0_t->predict(eval.x);
    for (Index r_ = 0; r_ < Index(f.eval.size()); ++r_) {
      Index i = f.eval[r_];
      v.ratio(i) = r(r_);
      v.mu1(i) = m1(r_);
      v.mu0(i) = m0(r_);
      if (target) v.mu0_t(i) = mt(r_);
    }
  }
  return v;
}

}  // namespace ct
