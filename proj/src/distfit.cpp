#include "smartrel/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartrel/common.hpp"
#include "smartrel/special.hpp"

namespace smartrel::distfit {

namespace {

constexpr double kLogSigmaFloor = -12.0;

void check_data(const std::vector<LifetimeRecord>& data) {
  if (data.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, "no lifetime records");
  }
  for (const auto& rec : data) {
    if (rec.time <= 0.0) {
      throw ValidationError(ErrorCode::NonPositiveTime,
                            "unit " + rec.unit_id + " has nonpositive time");
    }
  }
}

}  // namespace

LifetimeFamily family_from_string(const std::string& name) {
  if (name == "weibull") return LifetimeFamily::weibull;
  if (name == "lognormal") return LifetimeFamily::lognormal;
  throw ValidationError(ErrorCode::InvalidConfig, "unknown lifetime family '" + name + "'");
}

std::string family_name(LifetimeFamily family) {
  return family == LifetimeFamily::weibull ? "weibull" : "lognormal";
}

double lifetime_loglik(const std::vector<LifetimeRecord>& data, LifetimeFamily family,
                       const LocScaleParams& params) {
  check_data(data);
  if (params.sigma <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveSigma, "sigma must be positive");
  }
  const double log_sigma = std::log(params.sigma);
  double ll = 0.0;
  for (const auto& rec : data) {
    const double z = (std::log(rec.time) - params.mu) / params.sigma;
    if (family == LifetimeFamily::weibull) {
      ll += rec.status ? -log_sigma - std::log(rec.time) + log_sev_pdf(z)
                       : -std::exp(z);
    } else {
      ll += rec.status ? -log_sigma - std::log(rec.time) + log_norm_pdf(z)
                       : log_norm_sf(z);
    }
  }
  return ll;
}

Eigen::Vector2d lifetime_loglik_grad(const std::vector<LifetimeRecord>& data,
                                     LifetimeFamily family, double mu, double log_sigma) {
  const double sigma = std::exp(log_sigma);
  double d_mu = 0.0;
  double d_ls = 0.0;
  for (const auto& rec : data) {
    const double z = (std::log(rec.time) - mu) / sigma;
    double dz;  // d loglik / dz for this record
    if (family == LifetimeFamily::weibull) {
      dz = rec.status ? 1.0 - std::exp(z) : -std::exp(z);
    } else {
      dz = rec.status ? -z : -norm_hazard(z);
    }
    d_mu += -dz / sigma;
    d_ls += -dz * z - (rec.status ? 1.0 : 0.0);
  }
  return {d_mu, d_ls};
}

FitResult fit_lifetime(const std::vector<LifetimeRecord>& data, LifetimeFamily family,
                       const FitLifetimeOptions& opts) {
  check_data(data);
  std::vector<double> log_failures;
  for (const auto& rec : data) {
    if (rec.status == 1) log_failures.push_back(std::log(rec.time));
  }
  if (log_failures.empty()) {
    throw ValidationError(ErrorCode::AllCensored, "no failures in lifetime data");
  }

  double mu0 = 0.0;
  for (double lt : log_failures) mu0 += lt;
  mu0 /= static_cast<double>(log_failures.size());
  double sigma0 = 1.0;
  if (log_failures.size() >= 2) {
    double ss = 0.0;
    for (double lt : log_failures) ss += (lt - mu0) * (lt - mu0);
    sigma0 = std::sqrt(ss / static_cast<double>(log_failures.size() - 1));
    if (!(sigma0 > 0.0)) sigma0 = 1.0;
  }

  const bool fix_sigma = opts.fixed_sigma.has_value();
  if (fix_sigma && *opts.fixed_sigma <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveSigma, "fixed sigma must be positive");
  }

  auto unpack = [&](const Eigen::VectorXd& x) {
    LocScaleParams p;
    p.mu = x[0];
    p.sigma = fix_sigma ? *opts.fixed_sigma : std::exp(x[1]);
    return p;
  };
  Objective objective = [&](const Eigen::VectorXd& x) {
    return lifetime_loglik(data, family, unpack(x));
  };
  Gradient gradient = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const LocScaleParams p = unpack(x);
    const Eigen::Vector2d g =
        lifetime_loglik_grad(data, family, p.mu, std::log(p.sigma));
    if (fix_sigma) return g.head(1);
    return g;
  };

  const Eigen::Index dim = fix_sigma ? 1 : 2;
  Eigen::VectorXd start(dim);
  start[0] = mu0;
  BoxConstraints box = BoxConstraints::unbounded(dim);
  if (!fix_sigma) {
    start[1] = std::log(sigma0);
    box.lower[1] = kLogSigmaFloor;  // sigma -> 0 is a degenerate boundary
  }

  const MaximizeResult opt = maximize(objective, start, box, opts.optimize, gradient);
  const LocScaleParams p_hat = unpack(opt.argmax);

  FitResult result;
  result.model_tag = family_name(family);
  result.theta_hat = Eigen::Vector2d(p_hat.mu, p_hat.sigma);
  result.loglik = opt.value;
  result.converged = opt.converged;
  result.n_iter = opt.n_iter;

  const bool degenerate = !fix_sigma && opt.argmax[1] <= kLogSigmaFloor + 1e-9;
  if (degenerate) {
    result.converged = false;
    result.flags.push_back("DegenerateData");
    result.boundary_params.push_back(1);
    return result;
  }

  Eigen::MatrixXd cov_internal;
  if (covariance_from_loglik(objective, opt.argmax, {}, &cov_internal)) {
    // Delta method from (mu, log sigma) to (mu, sigma).
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd cov(2, 2);
    if (fix_sigma) {
      cov.setZero();
      cov(0, 0) = cov_internal(0, 0);
    } else {
      jac(1, 1) = p_hat.sigma;
      cov = jac * cov_internal * jac.transpose();
    }
    result.covariance = cov;
    result.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return result;
}

double cdf_at(const LocScaleParams& params, LifetimeFamily family, double t) {
  if (t <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveTime, "t must be positive");
  }
  if (params.sigma <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveSigma, "sigma must be positive");
  }
  const double z = (std::log(t) - params.mu) / params.sigma;
  return family == LifetimeFamily::weibull ? sev_cdf(z) : norm_cdf(z);
}

double reliability_at(const LocScaleParams& params, LifetimeFamily family, double t) {
  if (t <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveTime, "t must be positive");
  }
  if (params.sigma <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveSigma, "sigma must be positive");
  }
  const double z = (std::log(t) - params.mu) / params.sigma;
  return family == LifetimeFamily::weibull ? std::exp(-std::exp(z)) : norm_sf(z);
}

double quantile(const LocScaleParams& params, LifetimeFamily family, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError(ErrorCode::ProbabilityOutOfRange, "p must be in (0,1)");
  }
  const double z =
      family == LifetimeFamily::weibull ? sev_quantile(p) : norm_quantile(p);
  return std::exp(params.mu + params.sigma * z);
}

}  // namespace smartrel::distfit
