#ifndef SMARTREL_SPECIAL_HPP
#define SMARTREL_SPECIAL_HPP

#include <cmath>

// Scalar special functions shared by the distribution and process code.
// Everything here is deterministic and branch-stable so that seeded
// simulation output is reproducible.

namespace smartrel {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kLog2Pi = 1.8378770664093454836;

// Standard normal pdf.
inline double norm_pdf(double z) {
  return std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
}

inline double log_norm_pdf(double z) { return -0.5 * z * z - 0.5 * kLog2Pi; }

// Standard normal cdf via erfc; accurate in both tails.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Survival function 1 - Phi(z) without cancellation for large z.
inline double norm_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double log_norm_sf(double z);

// Hazard phi(z) / (1 - Phi(z)), stable for large z (Mills ratio expansion).
double norm_hazard(double z);

// Inverse standard normal cdf. Newton-refined to full double precision.
double norm_quantile(double p);

// Smallest-extreme-value (standardized log-Weibull) cdf/pdf on the z scale.
inline double sev_cdf(double z) { return -std::expm1(-std::exp(z)); }
inline double sev_pdf(double z) { return std::exp(z - std::exp(z)); }
inline double log_sev_pdf(double z) { return z - std::exp(z); }
inline double sev_quantile(double p) { return std::log(-std::log1p(-p)); }

// log(1 + e^x) without overflow.
inline double log1pexp(double x) {
  if (x > 33.0) return x;
  if (x < -37.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Logistic function, stable over the whole double range.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace smartrel

#endif  // SMARTREL_SPECIAL_HPP
