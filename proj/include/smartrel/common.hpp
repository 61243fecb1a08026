#ifndef SMARTREL_COMMON_HPP
#define SMARTREL_COMMON_HPP

#include <stdexcept>
#include <string>

namespace smartrel {

// Error taxonomy. ValidationError covers bad inputs (CLI exit code 2),
// ConvergenceError covers fits that did not reach a usable optimum (exit code 3).
enum class ErrorCode {
  MalformedRow,
  InvariantViolation,
  EmptyDataset,
  NonFiniteObjective,
  MaxIterExceeded,
  OrderOutOfRange,
  NonPositiveTime,
  NonPositiveSigma,
  AllCensored,
  DegenerateData,
  ProbabilityOutOfRange,
  NonPDSigma,
  EmptyPath,
  TooFewUnits,
  NonConvergence,
  GridNotPositive,
  ConstraintViolation,
  OutOfDomain,
  EventOutsideExposure,
  TooFewEvents,
  RefitFailureRateExceeded,
  DimensionMismatch,
  CompleteSeparation,
  TooFewOutcomes,
  EmptyClass,
  SingularCovariance,
  TooFewScores,
  ZeroWeight,
  UnsupportedDimension,
  RankDeficient,
  UnboundedIntensity,
  NonPositiveFactor,
  InvalidConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Bad or contradictory input data and arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An optimizer or fit that failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace smartrel

#endif  // SMARTREL_COMMON_HPP
