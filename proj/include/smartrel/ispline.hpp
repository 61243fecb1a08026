#ifndef SMARTREL_ISPLINE_HPP
#define SMARTREL_ISPLINE_HPP

#include <vector>

#include <Eigen/Dense>

namespace smartrel::nhpp {

// Monotone spline basis on [0, tau]: I-splines of degree 3, built as running
// integrals of order-3 (degree-2) normalized M-splines. Every basis function
// satisfies gamma_l(0) = 0, gamma_l(tau) = 1, and is nondecreasing, so a
// nonnegative coefficient vector yields a valid cumulative intensity.
class SplineBasis {
 public:
  // interior knots must lie strictly inside (0, tau), strictly increasing.
  static SplineBasis make(double tau, const std::vector<double>& interior_knots);

  // Interior knots at quantiles of the pooled event times; falls back to an
  // equally spaced grid when the events cannot pin distinct knots.
  static SplineBasis from_event_quantiles(double tau, std::vector<double> pooled_events,
                                          int n_basis);

  int n_basis() const { return n_basis_; }
  double tau() const { return tau_; }
  const std::vector<double>& interior_knots() const { return interior_; }

  // I-spline values gamma_l(t), each in [0,1]. Throws OutOfDomain unless
  // t in [0, tau] (within roundoff slack).
  Eigen::VectorXd eval_i(double t) const;

  // M-spline values d(gamma_l)/dt, each nonnegative.
  Eigen::VectorXd eval_m(double t) const;

 private:
  SplineBasis() = default;
  void build();
  Eigen::VectorXd raw_m(double x) const;

  static constexpr int kOrder = 3;  // M-spline order; I-splines are degree 3

  double tau_ = 1.0;
  int n_basis_ = 0;
  std::vector<double> interior_;
  std::vector<double> knots_;      // augmented, size n_basis + kOrder
  std::vector<double> breaks_;     // distinct knot boundaries 0..tau
  // cum_(l, a) = integral of M_l over [0, breaks_[a]].
  Eigen::MatrixXd cum_;
  Eigen::VectorXd gl_nodes_;
  Eigen::VectorXd gl_weights_;
};

}  // namespace smartrel::nhpp

#endif  // SMARTREL_ISPLINE_HPP
