#ifndef SMARTREL_UQVI_HPP
#define SMARTREL_UQVI_HPP

#include <vector>

#include <Eigen/Dense>

namespace smartrel::uqvi {

// Bayesian linear surrogate y | x, w ~ N(x'w, sigma^2) with prior
// w ~ N(0, s0^2 I) and known noise variance.
struct BayesLinearModel {
  Eigen::MatrixXd x;  // n x d design; n = 0 means no data
  Eigen::VectorXd y;
  double prior_var = 1.0;
  double noise_var = 1.0;

  Eigen::Index dim() const { return x.cols(); }
  void validate() const;
};

// Mean-field Gaussian variational family q(w) = prod_j N(m_j, exp(l_j)).
struct MeanFieldGaussian {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;
};

// Closed-form ELBO: E_q[log p(y|X,w)] + E_q[log p(w)] - E_q[log q].
double elbo(const BayesLinearModel& model, const MeanFieldGaussian& q);

// Gradient with respect to [mean; log_var].
Eigen::VectorXd elbo_grad(const BayesLinearModel& model, const MeanFieldGaussian& q);

struct ExactPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double log_evidence = 0.0;
};

// Conjugate Gaussian posterior and marginal likelihood, used as the oracle
// the variational solution is verified against.
ExactPosterior exact_posterior(const BayesLinearModel& model);

struct FitViOptions {
  int max_iter = 20000;
  double tol = 1e-10;  // stop when an accepted step improves ELBO by less
};

struct ViFit {
  MeanFieldGaussian q;
  std::vector<double> elbo_trace;  // value after every accepted step
  bool converged = false;
  int n_iter = 0;
};

// Gradient ascent with backtracking line search; only improving steps are
// accepted, so the trace is nondecreasing. Throws NonConvergence when the
// gain never falls below tol within max_iter.
ViFit fit_vi(const BayesLinearModel& model, const FitViOptions& opts = FitViOptions{});

struct Predictive {
  double mean = 0.0;
  double variance = 0.0;
};

// Predictive mean x'm and variance sigma^2 + sum_j x_j^2 exp(l_j).
Predictive posterior_predict(const BayesLinearModel& model, const MeanFieldGaussian& q,
                             const Eigen::VectorXd& x_new);

}  // namespace smartrel::uqvi

#endif  // SMARTREL_UQVI_HPP
