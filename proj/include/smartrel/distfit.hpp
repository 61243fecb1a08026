#ifndef SMARTREL_DISTFIT_HPP
#define SMARTREL_DISTFIT_HPP

#include <optional>
#include <string>
#include <vector>

#include "smartrel/optimize.hpp"
#include "smartrel/types.hpp"

namespace smartrel::distfit {

// Log-location-scale lifetime families: log T = mu + sigma * Z with Z either
// smallest-extreme-value (Weibull) or standard normal (lognormal).
enum class LifetimeFamily { weibull, lognormal };

LifetimeFamily family_from_string(const std::string& name);
std::string family_name(LifetimeFamily family);

struct LocScaleParams {
  double mu = 0.0;
  double sigma = 1.0;
};

// Censored log-likelihood: sum over units of
// status * log f(t) + (1 - status) * log[1 - F(t)].
double lifetime_loglik(const std::vector<LifetimeRecord>& data, LifetimeFamily family,
                       const LocScaleParams& params);

// Gradient with respect to the internal coordinates (mu, log sigma).
Eigen::Vector2d lifetime_loglik_grad(const std::vector<LifetimeRecord>& data,
                                     LifetimeFamily family, double mu, double log_sigma);

struct FitLifetimeOptions {
  MaximizeOptions optimize;
  std::optional<double> fixed_sigma;  // e.g. 1.0 turns Weibull into exponential
};

// MLE. theta_hat = (mu, sigma); SEs from inverse observed information,
// delta-method mapped to the sigma scale. Throws AllCensored when no unit
// failed; a sigma collapsing to zero is flagged DegenerateData.
FitResult fit_lifetime(const std::vector<LifetimeRecord>& data, LifetimeFamily family,
                       const FitLifetimeOptions& opts = FitLifetimeOptions{});

double cdf_at(const LocScaleParams& params, LifetimeFamily family, double t);
double reliability_at(const LocScaleParams& params, LifetimeFamily family, double t);
double quantile(const LocScaleParams& params, LifetimeFamily family, double p);

}  // namespace smartrel::distfit

#endif  // SMARTREL_DISTFIT_HPP
