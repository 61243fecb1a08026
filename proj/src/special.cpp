#include "smartrel/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartrel/common.hpp"

namespace smartrel {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::AllCensored: return "AllCensored";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::NonPDSigma: return "NonPDSigma";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::TooFewUnits: return "TooFewUnits";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::GridNotPositive: return "GridNotPositive";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::EventOutsideExposure: return "EventOutsideExposure";
    case ErrorCode::TooFewEvents: return "TooFewEvents";
    case ErrorCode::RefitFailureRateExceeded: return "RefitFailureRateExceeded";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CompleteSeparation: return "CompleteSeparation";
    case ErrorCode::TooFewOutcomes: return "TooFewOutcomes";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::TooFewScores: return "TooFewScores";
    case ErrorCode::ZeroWeight: return "ZeroWeight";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::UnboundedIntensity: return "UnboundedIntensity";
    case ErrorCode::NonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

double log_norm_sf(double z) {
  if (z < 25.0) {
    return std::log(norm_sf(z));
  }
  // Asymptotic: 1 - Phi(z) ~ phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6)
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return log_norm_pdf(z) - std::log(z) + std::log(series);
}

double norm_hazard(double z) {
  if (z < 25.0) {
    return norm_pdf(z) / norm_sf(z);
  }
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return z / series;
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ValidationError(ErrorCode::ProbabilityOutOfRange,
                          "norm_quantile requires p in (0,1)");
  }
  // Work with the smaller tail and iterate Newton on log(Phi), which is
  // well conditioned there; the central region converges just as fast.
  const bool upper = p > 0.5;
  const double q = upper ? 1.0 - p : p;
  double z;
  if (q > 0.02425) {
    const double r = q - 0.5;
    z = r * (2.50662827463 + 1.5 * r * r);
  } else {
    z = -std::sqrt(-2.0 * std::log(q));
  }
  const double log_q = std::log(q);
  for (int it = 0; it < 6; ++it) {
    const double cdf = norm_cdf(z);
    const double pdf = norm_pdf(z);
    if (cdf <= 0.0 || pdf <= 0.0) {
      z += 0.5;
      continue;
    }
    z -= (std::log(cdf) - log_q) * cdf / pdf;
  }
  return upper ? -z : z;
}

}  // namespace smartrel
