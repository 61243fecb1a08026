#include "smartrel/ispline.hpp"

#include <algorithm>
#include <cmath>

#include "smartrel/common.hpp"
#include "smartrel/quadrature.hpp"

namespace smartrel::nhpp {

SplineBasis SplineBasis::make(double tau, const std::vector<double>& interior_knots) {
  if (!(tau > 0.0)) {
    throw ValidationError(ErrorCode::InvalidConfig, "spline domain end must be positive");
  }
  for (std::size_t i = 0; i < interior_knots.size(); ++i) {
    if (!(interior_knots[i] > 0.0 && interior_knots[i] < tau)) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "interior knots must lie strictly inside (0, tau)");
    }
    if (i > 0 && interior_knots[i] <= interior_knots[i - 1]) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "interior knots must be strictly increasing");
    }
  }
  SplineBasis basis;
  basis.tau_ = tau;
  basis.interior_ = interior_knots;
  basis.n_basis_ = static_cast<int>(interior_knots.size()) + kOrder;
  basis.build();
  return basis;
}

SplineBasis SplineBasis::from_event_quantiles(double tau, std::vector<double> pooled_events,
                                              int n_basis) {
  if (n_basis < kOrder) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "need at least 3 spline basis functions");
  }
  const int n_interior = n_basis - kOrder;
  std::vector<double> interior;
  if (n_interior > 0) {
    std::sort(pooled_events.begin(), pooled_events.end());
    std::vector<double> candidate;
    if (!pooled_events.empty()) {
      const double n = static_cast<double>(pooled_events.size());
      for (int j = 1; j <= n_interior; ++j) {
        const double level = static_cast<double>(j) / (n_interior + 1);
        const double pos = level * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, pooled_events.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        candidate.push_back((1.0 - frac) * pooled_events[lo] + frac * pooled_events[hi]);
      }
    }
    bool usable = candidate.size() == static_cast<std::size_t>(n_interior);
    for (std::size_t i = 0; usable && i < candidate.size(); ++i) {
      if (!(candidate[i] > 0.0 && candidate[i] < tau)) usable = false;
      if (i > 0 && candidate[i] <= candidate[i - 1]) usable = false;
    }
    if (usable) {
      interior = candidate;
    } else {
      for (int j = 1; j <= n_interior; ++j) {
        interior.push_back(tau * static_cast<double>(j) / (n_interior + 1));
      }
    }
  }
  return make(tau, interior);
}

void SplineBasis::build() {
  knots_.clear();
  for (int i = 0; i < kOrder; ++i) knots_.push_back(0.0);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  for (int i = 0; i < kOrder; ++i) knots_.push_back(tau_);

  breaks_.clear();
  breaks_.push_back(0.0);
  breaks_.insert(breaks_.end(), interior_.begin(), interior_.end());
  breaks_.push_back(tau_);

  const QuadratureRule rule = gauss_legendre_nodes(4);
  gl_nodes_ = rule.nodes;
  gl_weights_ = rule.weights;

  // Exact integrals of the piecewise-quadratic M-splines per break interval.
  const auto n_intervals = static_cast<Eigen::Index>(breaks_.size()) - 1;
  cum_.setZero(n_basis_, n_intervals + 1);
  for (Eigen::Index a = 0; a < n_intervals; ++a) {
    const double lo = breaks_[a];
    const double hi = breaks_[a + 1];
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    Eigen::VectorXd integral = Eigen::VectorXd::Zero(n_basis_);
    for (Eigen::Index g = 0; g < gl_nodes_.size(); ++g) {
      integral += (half * gl_weights_[g]) * raw_m(mid + half * gl_nodes_[g]);
    }
    cum_.col(a + 1) = cum_.col(a) + integral;
  }
}

Eigen::VectorXd SplineBasis::raw_m(double x) const {
  const auto n_knots = static_cast<int>(knots_.size());
  // Order-1 layer, then the standard M-spline recursion upward.
  std::vector<double> layer(n_knots - 1, 0.0);
  for (int i = 0; i + 1 < n_knots; ++i) {
    const double lo = knots_[i];
    const double hi = knots_[i + 1];
    if (hi > lo) {
      const bool inside = x >= lo && (x < hi || (x == tau_ && hi == tau_));
      if (inside) layer[i] = 1.0 / (hi - lo);
    }
  }
  for (int k = 2; k <= kOrder; ++k) {
    for (int i = 0; i + k < n_knots; ++i) {
      const double span = knots_[i + k] - knots_[i];
      double value = 0.0;
      if (span > 0.0) {
        value = k * ((x - knots_[i]) * layer[i] + (knots_[i + k] - x) * layer[i + 1]) /
                ((k - 1) * span);
      }
      layer[i] = value;
    }
  }
  Eigen::VectorXd m(n_basis_);
  for (int l = 0; l < n_basis_; ++l) m[l] = layer[l];
  return m;
}

Eigen::VectorXd SplineBasis::eval_m(double t) const {
  const double slack = 1e-12 * (1.0 + tau_);
  if (t < -slack || t > tau_ + slack) {
    throw ValidationError(ErrorCode::OutOfDomain, "spline evaluated outside [0, tau]");
  }
  return raw_m(std::clamp(t, 0.0, tau_));
}

Eigen::VectorXd SplineBasis::eval_i(double t) const {
  const double slack = 1e-12 * (1.0 + tau_);
  if (t < -slack || t > tau_ + slack) {
    throw ValidationError(ErrorCode::OutOfDomain, "spline evaluated outside [0, tau]");
  }
  const double x = std::clamp(t, 0.0, tau_);
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  const auto a = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(std::distance(breaks_.begin(), it)) - 1,
      static_cast<Eigen::Index>(breaks_.size()) - 2);
  Eigen::VectorXd values = cum_.col(std::max<Eigen::Index>(a, 0));
  if (x > breaks_[a]) {
    const double half = 0.5 * (x - breaks_[a]);
    const double mid = 0.5 * (x + breaks_[a]);
    for (Eigen::Index g = 0; g < gl_nodes_.size(); ++g) {
      values += (half * gl_weights_[g]) * raw_m(mid + half * gl_nodes_[g]);
    }
  }
  return values.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace smartrel::nhpp
