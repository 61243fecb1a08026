#include "smartrel/oodguard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "smartrel/common.hpp"

namespace smartrel::oodguard {

LdaEstimate fit_lda(const Eigen::MatrixXd& features, const std::vector<std::string>& labels) {
  const auto n = features.rows();
  const auto d = features.cols();
  if (n != static_cast<Eigen::Index>(labels.size())) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "label count does not match feature rows");
  }
  if (d < 1) {
    throw ValidationError(ErrorCode::InvalidConfig, "need at least one feature column");
  }

  std::map<std::string, std::vector<Eigen::Index>> by_class;
  std::vector<std::string> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [it, inserted] = by_class.try_emplace(labels[i]);
    if (inserted) order.push_back(labels[i]);
    it->second.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(order.size());
  if (k < 1) {
    throw ValidationError(ErrorCode::EmptyClass, "no classes present");
  }

  LdaEstimate estimate;
  estimate.class_labels = order;
  estimate.means.resize(d, k);
  estimate.counts.resize(k);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& rows = by_class[order[j]];
    if (rows.empty()) {
      throw ValidationError(ErrorCode::EmptyClass, "class " + order[j] + " is empty");
    }
    estimate.counts[j] = static_cast<int>(rows.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index row : rows) mean += features.row(row).transpose();
    mean /= static_cast<double>(rows.size());
    estimate.means.col(j) = mean;
    for (Eigen::Index row : rows) {
      const Eigen::VectorXd centered = features.row(row).transpose() - mean;
      scatter += centered * centered.transpose();
    }
  }
  // Divisor n, matching the plug-in pooled estimator.
  estimate.pooled_cov = scatter / static_cast<double>(n);

  auto near_singular = [&](const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double max_eig = eig.eigenvalues().maxCoeff();
    const double min_eig = eig.eigenvalues().minCoeff();
    return min_eig <= 1e-12 * std::max(max_eig, 1.0);
  };
  if (near_singular(estimate.pooled_cov)) {
    const double trace = estimate.pooled_cov.trace();
    estimate.ridge = trace > 0.0 ? 1e-6 * trace / static_cast<double>(d) : 1e-6;
    estimate.pooled_cov += estimate.ridge * Eigen::MatrixXd::Identity(d, d);
    estimate.ridge_applied = true;
    if (near_singular(estimate.pooled_cov)) {
      throw ValidationError(ErrorCode::SingularCovariance,
                            "pooled covariance singular even after ridge");
    }
  }
  estimate.precision_factor.compute(estimate.pooled_cov);
  if (estimate.precision_factor.info() != Eigen::Success) {
    throw ValidationError(ErrorCode::SingularCovariance,
                          "Cholesky of pooled covariance failed");
  }
  return estimate;
}

double confidence_score(const LdaEstimate& estimate, const Eigen::VectorXd& x) {
  if (x.size() != estimate.dim()) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "feature vector has wrong dimension");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < estimate.means.cols(); ++j) {
    const Eigen::VectorXd diff = x - estimate.means.col(j);
    const Eigen::VectorXd white = estimate.precision_factor.matrixL().solve(diff);
    best = std::max(best, -white.squaredNorm());
  }
  return best;
}

OodDecision ood_flag(const LdaEstimate& estimate, const Eigen::VectorXd& x,
                     double threshold) {
  return confidence_score(estimate, x) < threshold ? OodDecision::ood
                                                   : OodDecision::in_distribution;
}

double calibrate_threshold(const std::vector<double>& in_dist_scores, double target_fpr) {
  if (in_dist_scores.size() < 100) {
    throw ValidationError(ErrorCode::TooFewScores,
                          "need at least 100 in-distribution scores");
  }
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) {
    throw ValidationError(ErrorCode::ProbabilityOutOfRange,
                          "target_fpr must be in [0,1]");
  }
  std::vector<double> sorted = in_dist_scores;
  std::sort(sorted.begin(), sorted.end());
  if (target_fpr == 0.0) {
    return sorted.front() - 1e-9 * (1.0 + std::abs(sorted.front()));
  }
  const auto idx = std::min(
      static_cast<std::size_t>(target_fpr * static_cast<double>(sorted.size())),
      sorted.size() - 1);
  return sorted[idx];
}

Perturbation min_adversarial_perturbation(const LinearClassifier& clf,
                                          const Eigen::VectorXd& x) {
  const double w_norm2 = clf.w.squaredNorm();
  if (w_norm2 <= 0.0) {
    throw ValidationError(ErrorCode::ZeroWeight, "classifier weight vector is zero");
  }
  if (clf.w.size() != x.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "w and x dimension mismatch");
  }
  constexpr double kFlip = 1e-9;
  const double margin = clf.w.dot(x) + clf.b;
  Perturbation out;
  if (margin == 0.0) {
    // Already on the hyperplane: any infinitesimal push flips the sign side.
    out.r = kFlip / std::sqrt(w_norm2) * clf.w;
  } else {
    out.r = -(margin / w_norm2) * (1.0 + kFlip) * clf.w;
  }
  out.x_star = x + out.r;
  out.norm = out.r.norm();
  return out;
}

double detector_auc(const std::vector<double>& in_dist_scores,
                    const std::vector<double>& ood_scores) {
  if (in_dist_scores.empty() || ood_scores.empty()) {
    throw ValidationError(ErrorCode::TooFewScores, "both score sets must be nonempty");
  }
  // Mann-Whitney: P(ood score < in-dist score) with ties counted half.
  double wins = 0.0;
  for (double ood : ood_scores) {
    for (double in : in_dist_scores) {
      if (ood < in) {
        wins += 1.0;
      } else if (ood == in) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(in_dist_scores.size()) *
                 static_cast<double>(ood_scores.size()));
}

std::vector<RocPoint> detector_roc(const std::vector<double>& in_dist_scores,
                                   const std::vector<double>& ood_scores) {
  std::vector<double> thresholds;
  thresholds.insert(thresholds.end(), in_dist_scores.begin(), in_dist_scores.end());
  thresholds.insert(thresholds.end(), ood_scores.begin(), ood_scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<RocPoint> roc;
  roc.reserve(thresholds.size());
  for (double threshold : thresholds) {
    RocPoint point;
    point.threshold = threshold;
    std::size_t fp = 0;
    for (double s : in_dist_scores) fp += s < threshold ? 1 : 0;
    std::size_t tp = 0;
    for (double s : ood_scores) tp += s < threshold ? 1 : 0;
    point.fpr = static_cast<double>(fp) / static_cast<double>(in_dist_scores.size());
    point.tpr = static_cast<double>(tp) / static_cast<double>(ood_scores.size());
    roc.push_back(point);
  }
  return roc;
}

}  // namespace smartrel::oodguard
