#ifndef SMARTREL_OODGUARD_HPP
#define SMARTREL_OODGUARD_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smartrel::oodguard {

// LDA estimate: class means with one pooled covariance (divisor n), held with
// its Cholesky factor for scoring.
struct LdaEstimate {
  std::vector<std::string> class_labels;
  Eigen::MatrixXd means;        // one column per class
  Eigen::MatrixXd pooled_cov;   // after regularization, if any
  Eigen::LLT<Eigen::MatrixXd> precision_factor;
  std::vector<int> counts;
  bool ridge_applied = false;
  double ridge = 0.0;

  int n_classes() const { return static_cast<int>(class_labels.size()); }
  Eigen::Index dim() const { return means.rows(); }
};

// features: one row per sample. Pooled covariance gets a ridge eps*I when
// near-singular (eps = 1e-6 * trace/d, absolute 1e-6 floor for zero scatter);
// the estimate records that the ridge fired.
LdaEstimate fit_lda(const Eigen::MatrixXd& features, const std::vector<std::string>& labels);

// Mahalanobis confidence score: max_j of -(x - mu_j)' Sigma^-1 (x - mu_j).
// Always <= 0, and 0 exactly at a class mean.
double confidence_score(const LdaEstimate& estimate, const Eigen::VectorXd& x);

enum class OodDecision { in_distribution, ood };

// ood iff the score falls strictly below the threshold.
OodDecision ood_flag(const LdaEstimate& estimate, const Eigen::VectorXd& x,
                     double threshold);

// Empirical target_fpr-quantile of in-distribution scores. target_fpr = 0
// returns the minimum score minus machine slack (nothing flagged);
// target_fpr = 1 returns the maximum score (scores equal to it stay
// in-distribution under the strict comparison).
double calibrate_threshold(const std::vector<double>& in_dist_scores, double target_fpr);

struct LinearClassifier {
  Eigen::VectorXd w;
  double b = 0.0;

  int predict(const Eigen::VectorXd& x) const { return w.dot(x) + b >= 0.0 ? 1 : -1; }
};

struct Perturbation {
  Eigen::VectorXd r;
  Eigen::VectorXd x_star;
  double norm = 0.0;
};

// Minimal-L2 perturbation flipping a linear decision: r = -(w'x+b)/||w||^2 * w
// scaled by (1 + 1e-9). On the boundary the same epsilon along w/||w|| is
// returned.
Perturbation min_adversarial_perturbation(const LinearClassifier& clf,
                                          const Eigen::VectorXd& x);

// Rank-based AUC of scores as an OOD detector (higher score = in-dist).
double detector_auc(const std::vector<double>& in_dist_scores,
                    const std::vector<double>& ood_scores);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Threshold sweep over the pooled score set; tpr is the OOD detection rate.
std::vector<RocPoint> detector_roc(const std::vector<double>& in_dist_scores,
                                   const std::vector<double>& ood_scores);

}  // namespace smartrel::oodguard

#endif  // SMARTREL_OODGUARD_HPP
