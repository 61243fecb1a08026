#include "smartrel/degpath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartrel/common.hpp"
#include "smartrel/quadrature.hpp"
#include "smartrel/rng.hpp"
#include "smartrel/special.hpp"

namespace smartrel::degpath {

namespace {

constexpr double kLogVarFloor = -27.0;  // variance ~ 1.9e-12
constexpr double kLogVarCeil = 27.0;

void check_paths(const std::vector<DegradationPath>& paths) {
  if (paths.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, "no degradation paths");
  }
  for (const auto& p : paths) {
    if (p.times.empty()) {
      throw ValidationError(ErrorCode::EmptyPath, "unit " + p.unit_id + " has no observations");
    }
    if (p.times.size() != p.values.size()) {
      throw ValidationError(ErrorCode::InvariantViolation,
                            "unit " + p.unit_id + " times/values length mismatch");
    }
  }
}

struct UnitDesign {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;  // fixed-effect design
  Eigen::MatrixXd z;  // random-effect design
};

UnitDesign unit_design(const DegradationPath& path, const PathModel& model) {
  const auto n = static_cast<Eigen::Index>(path.times.size());
  UnitDesign d;
  d.y.resize(n);
  d.x.resize(n, model.fixed_dim());
  d.z.resize(n, model.random_dim());
  for (Eigen::Index j = 0; j < n; ++j) {
    d.y[j] = path.values[j];
    d.x.row(j) = model.fixed_row(path.times[j]).transpose();
    d.z.row(j) = model.random_row(path.times[j]).transpose();
  }
  return d;
}

Eigen::LLT<Eigen::MatrixXd> sigma_llt(const GpmParams& params) {
  Eigen::LLT<Eigen::MatrixXd> llt(params.sigma);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(ErrorCode::NonPDSigma,
                          "random-effect covariance is not positive definite");
  }
  return llt;
}

}  // namespace

PathTag path_tag_from_string(const std::string& name) {
  if (name == "random_intercept_slope") return PathTag::random_intercept_slope;
  if (name == "random_slope") return PathTag::random_slope;
  throw ValidationError(ErrorCode::InvalidConfig, "unknown path model '" + name + "'");
}

std::string path_tag_name(PathTag tag) {
  return tag == PathTag::random_intercept_slope ? "random_intercept_slope"
                                                : "random_slope";
}

Eigen::VectorXd PathModel::fixed_row(double t) const {
  if (tag == PathTag::random_intercept_slope) return Eigen::Vector2d(1.0, t);
  return Eigen::VectorXd::Constant(1, t);
}

Eigen::VectorXd PathModel::random_row(double t) const { return fixed_row(t); }

double PathModel::mean(double t, const Eigen::VectorXd& alpha,
                       const Eigen::VectorXd& gamma) const {
  return fixed_row(t).dot(alpha) + random_row(t).dot(gamma);
}

void GpmParams::validate(const PathModel& model) const {
  if (alpha.size() != model.fixed_dim()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "alpha dimension mismatch");
  }
  if (sigma.rows() != model.random_dim() || sigma.cols() != model.random_dim()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "Sigma dimension mismatch");
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw ValidationError(ErrorCode::NonPDSigma, "Sigma is not symmetric");
  }
  if (sigma_eps2 <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveSigma, "sigma_eps2 must be positive");
  }
  sigma_llt(*this);
}

double gpm_marginal_loglik(const std::vector<DegradationPath>& paths,
                           const PathModel& model, const GpmParams& params,
                           int quad_order) {
  check_paths(paths);
  params.validate(model);
  const int q = model.random_dim();
  const double sigma2 = params.sigma_eps2;
  const Eigen::LLT<Eigen::MatrixXd> sig_llt = sigma_llt(params);
  const Eigen::MatrixXd sigma_inv =
      sig_llt.solve(Eigen::MatrixXd::Identity(q, q));
  const double log_det_sigma =
      2.0 * Eigen::MatrixXd(sig_llt.matrixL()).diagonal().array().log().sum();

  const QuadratureRule rule = gauss_hermite_nodes(quad_order);
  // Tensor grid over q dimensions.
  const int n_nodes = static_cast<int>(rule.nodes.size());
  const int total = q == 1 ? n_nodes : n_nodes * n_nodes;

  double ll = 0.0;
  for (const auto& path : paths) {
    const UnitDesign d = unit_design(path, model);
    const Eigen::VectorXd r = d.y - d.x * params.alpha;
    // Conditional mode and precision of the random effect given the data.
    const Eigen::MatrixXd precision = d.z.transpose() * d.z / sigma2 + sigma_inv;
    const Eigen::LLT<Eigen::MatrixXd> prec_llt(precision);
    const Eigen::MatrixXd cond_cov =
        prec_llt.solve(Eigen::MatrixXd::Identity(q, q));
    const Eigen::VectorXd mode = cond_cov * (d.z.transpose() * r / sigma2);
    const Eigen::LLT<Eigen::MatrixXd> cov_llt(cond_cov);
    const Eigen::MatrixXd scale = Eigen::MatrixXd(cov_llt.matrixL());
    const double log_det_scale = scale.diagonal().array().log().sum();

    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(total);
    for (int k = 0; k < total; ++k) {
      Eigen::VectorXd u(q);
      double log_w = 0.0;
      if (q == 1) {
        u[0] = rule.nodes[k];
        log_w = std::log(rule.weights[k]);
      } else {
        const int i = k / n_nodes;
        const int j = k % n_nodes;
        u[0] = rule.nodes[i];
        u[1] = rule.nodes[j];
        log_w = std::log(rule.weights[i]) + std::log(rule.weights[j]);
      }
      const Eigen::VectorXd gamma = mode + kSqrt2 * (scale * u);
      const Eigen::VectorXd resid = r - d.z * gamma;
      double log_g = -0.5 * resid.squaredNorm() / sigma2 -
                     0.5 * d.y.size() * (std::log(sigma2) + kLog2Pi);
      const Eigen::VectorXd white = sig_llt.matrixL().solve(gamma);
      log_g += -0.5 * white.squaredNorm() - 0.5 * q * kLog2Pi - 0.5 * log_det_sigma;
      terms[k] = log_w + u.squaredNorm() + log_g;
      max_term = std::max(max_term, terms[k]);
    }
    double sum = 0.0;
    for (double term : terms) sum += std::exp(term - max_term);
    ll += 0.5 * q * std::log(2.0) + log_det_scale + max_term + std::log(sum);
  }
  return ll;
}

double gpm_marginal_loglik_closed_form(const std::vector<DegradationPath>& paths,
                                       const PathModel& model, const GpmParams& params) {
  check_paths(paths);
  params.validate(model);
  double ll = 0.0;
  for (const auto& path : paths) {
    const UnitDesign d = unit_design(path, model);
    const auto n = d.y.size();
    const Eigen::MatrixXd v =
        d.z * params.sigma * d.z.transpose() +
        params.sigma_eps2 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) {
      throw ValidationError(ErrorCode::NonPDSigma, "marginal covariance not PD");
    }
    const Eigen::VectorXd r = d.y - d.x * params.alpha;
    const Eigen::VectorXd white = llt.matrixL().solve(r);
    const double log_det =
        2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    ll += -0.5 * (n * kLog2Pi + log_det + white.squaredNorm());
  }
  return ll;
}

namespace {

// Internal coordinates: [alpha, log-Cholesky of Sigma, log sigma_eps2].
int chol_dim(int q) { return q * (q + 1) / 2; }

Eigen::MatrixXd chol_from_internal(const Eigen::VectorXd& c, int q) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(q, q);
  if (q == 1) {
    l(0, 0) = std::exp(c[0]);
  } else {
    l(0, 0) = std::exp(c[0]);
    l(1, 0) = c[1];
    l(1, 1) = std::exp(c[2]);
  }
  return l;
}

}  // namespace

GpmParams gpm_params_from_internal(const PathModel& model, const Eigen::VectorXd& x) {
  const int p = model.fixed_dim();
  const int q = model.random_dim();
  GpmParams params;
  params.alpha = x.head(p);
  const Eigen::MatrixXd l = chol_from_internal(x.segment(p, chol_dim(q)), q);
  params.sigma = l * l.transpose();
  params.sigma_eps2 = std::exp(x[p + chol_dim(q)]);
  return params;
}

Eigen::VectorXd gpm_internal_from_params(const PathModel& model, const GpmParams& params) {
  const int p = model.fixed_dim();
  const int q = model.random_dim();
  Eigen::VectorXd x(p + chol_dim(q) + 1);
  x.head(p) = params.alpha;
  const Eigen::MatrixXd l = Eigen::MatrixXd(sigma_llt(params).matrixL());
  if (q == 1) {
    x[p] = std::log(l(0, 0));
  } else {
    x[p] = std::log(l(0, 0));
    x[p + 1] = l(1, 0);
    x[p + 2] = std::log(l(1, 1));
  }
  x[p + chol_dim(q)] = std::log(params.sigma_eps2);
  return x;
}

// Analytic gradient of the closed-form marginal in internal coordinates.
// Valid for the quadrature objective too: for paths linear in the random
// effects the adaptive rule integrates the Gaussian integrand exactly.
Eigen::VectorXd gpm_loglik_grad_internal(const std::vector<DegradationPath>& paths,
                                         const PathModel& model,
                                         const Eigen::VectorXd& x) {
  const int p = model.fixed_dim();
  const int q = model.random_dim();
  const GpmParams params = gpm_params_from_internal(model, x);
  const Eigen::MatrixXd l = chol_from_internal(x.segment(p, chol_dim(q)), q);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  for (const auto& path : paths) {
    const UnitDesign d = unit_design(path, model);
    const auto n = d.y.size();
    const Eigen::MatrixXd v =
        d.z * params.sigma * d.z.transpose() +
        params.sigma_eps2 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::LLT<Eigen::MatrixXd> llt(v);
    const Eigen::VectorXd r = d.y - d.x * params.alpha;
    const Eigen::VectorXd vinv_r = llt.solve(r);

    grad.head(p) += d.x.transpose() * vinv_r;

    // d Sigma / d c_k = E_k L' + L E_k' with E_k the basis direction.
    for (int k = 0; k < chol_dim(q); ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(q, q);
      if (q == 1) {
        e(0, 0) = l(0, 0);  // log parametrization
      } else if (k == 0) {
        e(0, 0) = l(0, 0);
      } else if (k == 1) {
        e(1, 0) = 1.0;
      } else {
        e(1, 1) = l(1, 1);
      }
      const Eigen::MatrixXd d_sigma = e * l.transpose() + l * e.transpose();
      const Eigen::MatrixXd v_dot = d.z * d_sigma * d.z.transpose();
      grad[p + k] += 0.5 * (vinv_r.dot(v_dot * vinv_r) - llt.solve(v_dot).trace());
    }
    // d V / d log sigma_eps2 = sigma_eps2 * I.
    const double trace_term = llt.solve(Eigen::MatrixXd::Identity(n, n)).trace();
    grad[p + chol_dim(q)] +=
        0.5 * params.sigma_eps2 * (vinv_r.squaredNorm() - trace_term);
  }
  return grad;
}

GpmFit fit_gpm(const std::vector<DegradationPath>& paths, const PathModel& model,
               const FitGpmOptions& opts) {
  check_paths(paths);
  if (paths.size() < 2) {
    throw ValidationError(ErrorCode::TooFewUnits, "need at least 2 units");
  }
  const int p = model.fixed_dim();
  const int q = model.random_dim();
  const int dim = p + chol_dim(q) + 1;
  std::size_t total_obs = 0;
  for (const auto& path : paths) total_obs += path.times.size();
  if (total_obs <= static_cast<std::size_t>(dim)) {
    throw ValidationError(ErrorCode::TooFewUnits,
                          "fewer observations than parameters");
  }

  // Start from pooled least squares; unit-level slopes seed the variances.
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  for (const auto& path : paths) {
    const UnitDesign d = unit_design(path, model);
    xtx += d.x.transpose() * d.x;
    xty += d.x.transpose() * d.y;
  }
  const Eigen::VectorXd alpha0 =
      xtx.ldlt().solve(xty).eval().unaryExpr([](double v) {
        return std::isfinite(v) ? v : 0.0;
      });
  double rss = 0.0;
  for (const auto& path : paths) {
    const UnitDesign d = unit_design(path, model);
    rss += (d.y - d.x * alpha0).squaredNorm();
  }
  const double var0 = std::max(rss / static_cast<double>(total_obs), 1e-8);

  Eigen::VectorXd start(dim);
  start.head(p) = alpha0;
  if (q == 1) {
    start[p] = 0.5 * std::log(var0);
  } else {
    start[p] = 0.5 * std::log(var0);
    start[p + 1] = 0.0;
    start[p + 2] = 0.5 * std::log(var0);
  }
  start[dim - 1] = std::log(0.5 * var0);

  BoxConstraints box = BoxConstraints::unbounded(dim);
  if (q == 1) {
    box.lower[p] = 0.5 * kLogVarFloor;
    box.upper[p] = 0.5 * kLogVarCeil;
  } else {
    box.lower[p] = box.lower[p + 2] = 0.5 * kLogVarFloor;
    box.upper[p] = box.upper[p + 2] = 0.5 * kLogVarCeil;
  }
  box.lower[dim - 1] = kLogVarFloor;
  box.upper[dim - 1] = kLogVarCeil;

  Objective objective = [&](const Eigen::VectorXd& x) {
    try {
      return gpm_marginal_loglik(paths, model, gpm_params_from_internal(model, x),
                                 opts.quad_order);
    } catch (const ValidationError& err) {
      // Ill-conditioned Sigma explored by the line search: step back.
      if (err.code() == ErrorCode::NonPDSigma) {
        return -std::numeric_limits<double>::infinity();
      }
      throw;
    }
  };
  Gradient gradient = [&](const Eigen::VectorXd& x) {
    return gpm_loglik_grad_internal(paths, model, x);
  };

  const MaximizeResult opt = maximize(objective, start, box, opts.optimize, gradient);

  GpmFit fit;
  fit.model = model;
  fit.params = gpm_params_from_internal(model, opt.argmax);
  FitResult& result = fit.result;
  result.model_tag = path_tag_name(model.tag);
  result.loglik = opt.value;
  result.converged = opt.converged;
  result.n_iter = opt.n_iter;

  // Natural report: alpha, vech of Sigma, sigma_eps2.
  Eigen::VectorXd theta(dim);
  theta.head(p) = fit.params.alpha;
  if (q == 1) {
    theta[p] = fit.params.sigma(0, 0);
  } else {
    theta[p] = fit.params.sigma(0, 0);
    theta[p + 1] = fit.params.sigma(1, 0);
    theta[p + 2] = fit.params.sigma(1, 1);
  }
  theta[dim - 1] = fit.params.sigma_eps2;
  result.theta_hat = theta;

  const bool eps_floor = opt.argmax[dim - 1] <= kLogVarFloor + 1e-9;
  bool sigma_floor = false;
  if (q == 1) {
    sigma_floor = opt.argmax[p] <= 0.5 * kLogVarFloor + 1e-9;
  } else {
    sigma_floor = opt.argmax[p] <= 0.5 * kLogVarFloor + 1e-9 ||
                  opt.argmax[p + 2] <= 0.5 * kLogVarFloor + 1e-9;
  }
  if (eps_floor || sigma_floor) {
    result.converged = false;
    result.flags.push_back("DegenerateData");
    return fit;
  }

  Eigen::MatrixXd cov_internal;
  if (covariance_from_loglik(objective, opt.argmax, {}, &cov_internal)) {
    result.covariance = cov_internal;
    result.std_errors = cov_internal.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

std::vector<CdfPoint> failure_time_cdf(const GpmParams& params, const PathModel& model,
                                       double threshold, const std::vector<double>& t_grid,
                                       int n_sim, std::uint64_t seed) {
  params.validate(model);
  if (n_sim < 1000) {
    throw ValidationError(ErrorCode::InvalidConfig, "n_sim must be at least 1000");
  }
  for (double t : t_grid) {
    if (!(t > 0.0)) {
      throw ValidationError(ErrorCode::GridNotPositive, "grid times must be positive");
    }
  }
  const int q = model.random_dim();
  const Eigen::MatrixXd l = Eigen::MatrixXd(sigma_llt(params).matrixL());

  std::vector<CdfPoint> out(t_grid.size());
  std::vector<int> counts(t_grid.size(), 0);
  SplitRng root(seed);
  for (int s = 0; s < n_sim; ++s) {
    SplitRng draw_rng = root.split(static_cast<std::uint64_t>(s));
    const Eigen::VectorXd gamma = l * draw_rng.normal_vector(q);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      if (model.mean(t_grid[k], params.alpha, gamma) >= threshold) ++counts[k];
    }
  }
  std::vector<double> raw(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    raw[k] = static_cast<double>(counts[k]) / n_sim;
  }
  // Pool adjacent violators: the reported curve must be a cdf.
  std::vector<double> iso = raw;
  std::vector<double> weight(iso.size(), 1.0);
  std::vector<std::size_t> len(iso.size(), 1);
  std::size_t blocks = 0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    iso[blocks] = raw[k];
    weight[blocks] = 1.0;
    len[blocks] = 1;
    ++blocks;
    while (blocks > 1 && iso[blocks - 2] > iso[blocks - 1]) {
      const double merged_w = weight[blocks - 2] + weight[blocks - 1];
      iso[blocks - 2] = (weight[blocks - 2] * iso[blocks - 2] +
                         weight[blocks - 1] * iso[blocks - 1]) /
                        merged_w;
      weight[blocks - 2] = merged_w;
      len[blocks - 2] += len[blocks - 1];
      --blocks;
    }
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t r = 0; r < len[b]; ++r) {
      out[pos].t = t_grid[pos];
      out[pos].cdf = std::clamp(iso[b], 0.0, 1.0);
      out[pos].mc_se = std::sqrt(raw[pos] * (1.0 - raw[pos]) / n_sim);
      ++pos;
    }
  }
  return out;
}

}  // namespace smartrel::degpath
