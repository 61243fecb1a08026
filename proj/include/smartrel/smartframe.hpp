#ifndef SMARTREL_SMARTFRAME_HPP
#define SMARTREL_SMARTFRAME_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "smartrel/nhpp.hpp"
#include "smartrel/types.hpp"

namespace smartrel::smartframe {

// One interruptive-event source: an arrival intensity plus its external
// covariate path x_j(t) (piecewise constant, single-unit semantics).
struct InterruptiveProcess {
  std::string label;  // ood_shift, low_quality_data, adversarial, other, ...
  nhpp::IntensityModel intensity;
  std::vector<ExposureStep> exposure;
};

// Logistic failure gates: beta_j includes the intercept as its first entry,
// so beta_j has one more entry than the shared covariate vector z.
struct GatingModel {
  std::vector<std::string> labels;
  std::vector<Eigen::VectorXd> betas;

  const Eigen::VectorXd& beta_for(const std::string& label) const;
};

// p_j(z) = exp(b0 + z'b) / (1 + exp(b0 + z'b)), stable over the whole range.
double gate_prob(const Eigen::VectorXd& z, const Eigen::VectorXd& beta);

// Overall failure intensity: sum_j lambda_j(t) x_j(t) p_j(z).
double composite_intensity(const std::vector<InterruptiveProcess>& processes,
                           const GatingModel& gating, double t,
                           const Eigen::VectorXd& z);

struct LabeledEvent {
  double time = 0.0;
  std::string label;
  bool failed = false;
};

// Draw every interruptive process by thinning, then mark each event failed
// with its gate probability. The failed sub-stream realizes the composite
// intensity.
std::vector<LabeledEvent> simulate_smart(const std::vector<InterruptiveProcess>& processes,
                                         const GatingModel& gating,
                                         const Eigen::VectorXd& z, double horizon,
                                         std::uint64_t seed);

struct LabeledOutcome {
  Eigen::VectorXd z;
  std::string label;
  bool failed = false;
};

struct GateFit {
  std::string label;
  Eigen::VectorXd beta;
  Eigen::VectorXd std_errors;
  double loglik = 0.0;
  int n = 0;
  int n_iter = 0;
  bool converged = false;
};

// Bernoulli log-likelihood of a gate and its gradient; design rows are
// (1, z') per outcome.
double gate_loglik(const Eigen::MatrixXd& design, const std::vector<int>& failed,
                   const Eigen::VectorXd& beta);
Eigen::VectorXd gate_loglik_grad(const Eigen::MatrixXd& design,
                                 const std::vector<int>& failed,
                                 const Eigen::VectorXd& beta);

// Per-process logistic MLE by Newton iteration; SEs from observed
// information. Throws CompleteSeparation when a process has only one outcome
// or the likelihood diverges, TooFewOutcomes when there are fewer
// observations than coefficients.
std::vector<GateFit> fit_gates(const std::vector<LabeledOutcome>& outcomes);

}  // namespace smartrel::smartframe

#endif  // SMARTREL_SMARTFRAME_HPP
