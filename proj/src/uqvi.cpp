#include "smartrel/uqvi.hpp"

#include <cmath>

#include "smartrel/common.hpp"
#include "smartrel/special.hpp"

namespace smartrel::uqvi {

void BayesLinearModel::validate() const {
  if (x.rows() != y.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "X rows must match y length");
  }
  if (x.cols() < 1) {
    throw ValidationError(ErrorCode::InvalidConfig, "need at least one column");
  }
  if (!(prior_var > 0.0) || !(noise_var > 0.0)) {
    throw ValidationError(ErrorCode::InvalidConfig, "variances must be positive");
  }
}

namespace {

void check_dims(const BayesLinearModel& model, const MeanFieldGaussian& q) {
  model.validate();
  if (q.mean.size() != model.dim() || q.log_var.size() != model.dim()) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "variational parameters do not match the model dimension");
  }
}

}  // namespace

double elbo(const BayesLinearModel& model, const MeanFieldGaussian& q) {
  check_dims(model, q);
  const auto n = model.x.rows();
  const auto d = model.dim();
  const Eigen::VectorXd v = q.log_var.array().exp();

  double value = 0.0;
  if (n > 0) {
    const Eigen::VectorXd resid = model.y - model.x * q.mean;
    const Eigen::VectorXd col_norms2 = model.x.array().square().colwise().sum();
    value += -0.5 * n * (kLog2Pi + std::log(model.noise_var)) -
             0.5 / model.noise_var * (resid.squaredNorm() + col_norms2.dot(v));
  }
  value += -0.5 * d * (kLog2Pi + std::log(model.prior_var)) -
           0.5 / model.prior_var * (q.mean.squaredNorm() + v.sum());
  // Entropy of q.
  value += 0.5 * d * (kLog2Pi + 1.0) + 0.5 * q.log_var.sum();
  return value;
}

Eigen::VectorXd elbo_grad(const BayesLinearModel& model, const MeanFieldGaussian& q) {
  check_dims(model, q);
  const auto d = model.dim();
  const Eigen::VectorXd v = q.log_var.array().exp();

  Eigen::VectorXd g(2 * d);
  Eigen::VectorXd g_mean = -q.mean / model.prior_var;
  Eigen::VectorXd g_logv =
      Eigen::VectorXd::Constant(d, 0.5) - 0.5 / model.prior_var * v;
  if (model.x.rows() > 0) {
    const Eigen::VectorXd resid = model.y - model.x * q.mean;
    const Eigen::VectorXd col_norms2 = model.x.array().square().colwise().sum();
    g_mean += model.x.transpose() * resid / model.noise_var;
    g_logv -= 0.5 / model.noise_var * col_norms2.cwiseProduct(v);
  }
  g.head(d) = g_mean;
  g.tail(d) = g_logv;
  return g;
}

ExactPosterior exact_posterior(const BayesLinearModel& model) {
  model.validate();
  const auto d = model.dim();
  const Eigen::MatrixXd precision =
      model.x.transpose() * model.x / model.noise_var +
      Eigen::MatrixXd::Identity(d, d) / model.prior_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);

  ExactPosterior post;
  post.covariance = llt.solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::VectorXd xty =
      model.x.rows() > 0 ? Eigen::VectorXd(model.x.transpose() * model.y)
                         : Eigen::VectorXd::Zero(d);
  post.mean = post.covariance * xty / model.noise_var;

  const auto n = model.x.rows();
  if (n == 0) {
    post.log_evidence = 0.0;
    return post;
  }
  // log N(y; 0, sigma^2 I + s0^2 X X') via the d-dimensional identities.
  const double log_det_precision =
      2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double log_det_c = n * std::log(model.noise_var) +
                           d * std::log(model.prior_var) + log_det_precision;
  const double quad = model.y.squaredNorm() / model.noise_var -
                      xty.dot(post.mean) / model.noise_var;
  post.log_evidence = -0.5 * (n * kLog2Pi + log_det_c + quad);
  return post;
}

ViFit fit_vi(const BayesLinearModel& model, const FitViOptions& opts) {
  model.validate();
  const auto d = model.dim();
  ViFit fit;
  fit.q.mean = Eigen::VectorXd::Zero(d);
  fit.q.log_var = Eigen::VectorXd::Constant(d, std::log(model.prior_var));

  // Curvature of the ELBO: exact in the mean block (constant precision P),
  // per-coordinate in the log-variance block. Scaling the gradient by the
  // inverse curvature gives Newton-quality ascent steps while the
  // backtracking line search keeps every accepted step an improvement.
  const Eigen::MatrixXd precision =
      model.x.transpose() * model.x / model.noise_var +
      Eigen::MatrixXd::Identity(d, d) / model.prior_var;
  const Eigen::LLT<Eigen::MatrixXd> prec_llt(precision);
  const Eigen::VectorXd col_norms2 =
      model.x.rows() > 0
          ? Eigen::VectorXd(model.x.array().square().colwise().sum())
          : Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd half_a =
      0.5 * (col_norms2 / model.noise_var +
             Eigen::VectorXd::Constant(d, 1.0 / model.prior_var));

  double value = elbo(model, fit.q);
  fit.elbo_trace.push_back(value);
  for (int it = 0; it < opts.max_iter; ++it) {
    fit.n_iter = it + 1;
    const Eigen::VectorXd g = elbo_grad(model, fit.q);
    Eigen::VectorXd dir(2 * d);
    dir.head(d) = prec_llt.solve(g.head(d));
    // |d^2 elbo / d l^2| = a_j v_j at the current variance
    dir.tail(d) = g.tail(d).cwiseQuotient(
        half_a.cwiseProduct(fit.q.log_var.array().exp().matrix()));

    MeanFieldGaussian trial;
    double trial_value = value;
    bool accepted = false;
    double step = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      trial.mean = fit.q.mean + step * dir.head(d);
      trial.log_var = fit.q.log_var + step * dir.tail(d);
      trial_value = elbo(model, trial);
      if (std::isfinite(trial_value) &&
          trial_value >= value + 1e-4 * step * g.dot(dir)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double gain = trial_value - value;
    fit.q = trial;
    value = trial_value;
    fit.elbo_trace.push_back(value);
    if (gain < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw ConvergenceError(ErrorCode::NonConvergence,
                           "ELBO ascent did not converge");
  }
  return fit;
}

Predictive posterior_predict(const BayesLinearModel& model, const MeanFieldGaussian& q,
                             const Eigen::VectorXd& x_new) {
  check_dims(model, q);
  if (x_new.size() != model.dim()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "x_new has wrong dimension");
  }
  Predictive out;
  out.mean = x_new.dot(q.mean);
  out.variance =
      model.noise_var + x_new.array().square().matrix().dot(
                            Eigen::VectorXd(q.log_var.array().exp()));
  return out;
}

}  // namespace smartrel::uqvi
