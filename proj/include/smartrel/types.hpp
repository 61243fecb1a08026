#ifndef SMARTREL_TYPES_HPP
#define SMARTREL_TYPES_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smartrel {

// One unit's failure or censoring time. status: 1 = failure, 0 = censored.
struct LifetimeRecord {
  std::string unit_id;
  double time = 0.0;
  int status = 1;
};

// Piecewise-constant exposure: `rate` exposure units per time unit on
// (start, end]. Steps for one unit must be ordered and non-overlapping.
struct ExposureStep {
  std::string unit_id;
  double start = 0.0;
  double end = 0.0;
  double rate = 0.0;
};

// Recurrent-event record: 0 < t_1 < ... < t_n < follow_up_end.
struct RecurrentHistory {
  std::string unit_id;
  std::vector<double> event_times;
  double follow_up_end = 0.0;
};

// Degradation measurements for one unit with its failure threshold.
struct DegradationPath {
  std::string unit_id;
  std::vector<double> times;
  std::vector<double> values;
  double threshold = 0.0;
};

// Shared result type for all fitters.
struct FitResult {
  std::string model_tag;
  Eigen::VectorXd theta_hat;
  double loglik = 0.0;
  std::optional<Eigen::VectorXd> std_errors;
  std::optional<Eigen::MatrixXd> covariance;
  bool converged = false;
  int n_iter = 0;
  // Parameters pinned at a constraint boundary; their Wald SEs are not valid
  // and are reported as zero.
  std::vector<int> boundary_params;
  std::vector<std::string> flags;
};

}  // namespace smartrel

#endif  // SMARTREL_TYPES_HPP
