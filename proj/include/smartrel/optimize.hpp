#ifndef SMARTREL_OPTIMIZE_HPP
#define SMARTREL_OPTIMIZE_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace smartrel {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Box constraints; entries may be +/-infinity for unbounded coordinates.
struct BoxConstraints {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoxConstraints unbounded(Eigen::Index n);
  static BoxConstraints nonnegative(Eigen::Index n);

  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

struct MaximizeOptions {
  // Converged when the projected-gradient infinity norm falls below
  // tol * max(1, |f|), which keeps the criterion meaningful for
  // large-sample log-likelihoods.
  double tol = 1e-8;
  int max_iter = 500;
  int max_restarts = 2;  // deterministic perturbed restarts on stall
  double fd_step = 1e-6; // central-difference step when no gradient is given
};

struct MaximizeResult {
  Eigen::VectorXd argmax;
  double value = 0.0;
  bool converged = false;
  int n_iter = 0;
  double projected_grad_norm = 0.0;
};

// Projected quasi-Newton (BFGS) ascent. The returned point satisfies the box
// exactly. Throws NonFiniteObjective if the start is not finite; a run that
// hits max_iter returns best-so-far with converged=false.
MaximizeResult maximize(const Objective& objective, const Eigen::VectorXd& start,
                        const BoxConstraints& box,
                        const MaximizeOptions& opts = MaximizeOptions{},
                        const Gradient& gradient = nullptr);

// Central finite differences, step scaled per coordinate.
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double step = 1e-6);
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           double step = 1e-4);

// Covariance of a maximum-likelihood estimate from the inverse observed
// information (numerical Hessian of the log-likelihood at theta_hat).
// Rows/columns of parameters pinned at a constraint boundary are zeroed.
// Returns false when the information matrix is not invertible.
bool covariance_from_loglik(const Objective& loglik, const Eigen::VectorXd& theta_hat,
                            const std::vector<int>& pinned, Eigen::MatrixXd* covariance);

}  // namespace smartrel

#endif  // SMARTREL_OPTIMIZE_HPP
