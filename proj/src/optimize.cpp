#include "smartrel/optimize.hpp"

#include <cmath>
#include <limits>

#include "smartrel/common.hpp"
#include "smartrel/rng.hpp"

namespace smartrel {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kBoundSlack = 1e-12;

bool at_lower(const BoxConstraints& box, const Eigen::VectorXd& x, Eigen::Index i) {
  return x[i] <= box.lower[i] + kBoundSlack * (1.0 + std::abs(box.lower[i]));
}

bool at_upper(const BoxConstraints& box, const Eigen::VectorXd& x, Eigen::Index i) {
  return x[i] >= box.upper[i] - kBoundSlack * (1.0 + std::abs(box.upper[i]));
}

// Gradient of the maximization objective with blocked coordinates zeroed.
Eigen::VectorXd projected_gradient(const BoxConstraints& box, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& grad) {
  Eigen::VectorXd pg = grad;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (at_lower(box, x, i) && grad[i] < 0.0) pg[i] = 0.0;
    if (at_upper(box, x, i) && grad[i] > 0.0) pg[i] = 0.0;
  }
  return pg;
}

struct InnerResult {
  Eigen::VectorXd x;
  double value;
  Eigen::VectorXd grad;
  bool converged;
  int n_iter;
};

InnerResult ascend(const Objective& f, const Gradient& grad_fn,
                   const Eigen::VectorXd& start, const BoxConstraints& box,
                   const MaximizeOptions& opts) {
  const Eigen::Index n = start.size();
  Eigen::VectorXd x = box.project(start);
  double fx = f(x);
  if (!std::isfinite(fx)) {
    throw ValidationError(ErrorCode::NonFiniteObjective,
                          "objective not finite at start");
  }
  auto grad = [&](const Eigen::VectorXd& p) {
    return grad_fn ? grad_fn(p) : fd_gradient(f, p, opts.fd_step);
  };

  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  InnerResult res{x, fx, g, false, 0};

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    res.n_iter = iter + 1;
    const Eigen::VectorXd pg = projected_gradient(box, x, g);
    // Relative criterion: the gradient of a large-sample likelihood cannot be
    // evaluated below roundoff of the objective itself.
    if (pg.lpNorm<Eigen::Infinity>() < opts.tol * std::max(1.0, std::abs(fx))) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd dir = h_inv * g;  // ascent direction
    // Block components pointing out of active bounds; fall back to the
    // projected gradient if the quasi-Newton direction is unusable.
    for (Eigen::Index i = 0; i < n; ++i) {
      if (at_lower(box, x, i) && dir[i] < 0.0) dir[i] = 0.0;
      if (at_upper(box, x, i) && dir[i] > 0.0) dir[i] = 0.0;
    }
    if (dir.dot(pg) <= 0.0 || !dir.allFinite()) {
      dir = pg;
      h_inv.setIdentity();
    }

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = box.project(x + alpha * dir);
      const Eigen::VectorXd step = x_new - x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new >= fx + kArmijo * g.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Retry once along the raw projected gradient before giving up.
      if (dir != pg) {
        dir = pg;
        h_inv.setIdentity();
        alpha = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
          x_new = box.project(x + alpha * dir);
          const Eigen::VectorXd step = x_new - x;
          if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
          f_new = f(x_new);
          if (std::isfinite(f_new) && f_new >= fx + kArmijo * g.dot(step)) {
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
      }
      if (!accepted) {
        // No ascent step exists at machine precision. With a near-zero
        // projected gradient that is the optimum; otherwise let the restart
        // logic take over.
        res.converged = projected_gradient(box, x, g).lpNorm<Eigen::Infinity>() <=
                        1e-5 * std::max(1.0, std::abs(fx));
        break;
      }
    }

    const Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g - g_new;  // Hessian of -f is positive definite
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Eigen::VectorXd hy = h_inv * y;
      const double yhy = y.dot(hy);
      h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
               (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    x = x_new;
    fx = f_new;
    g = g_new;
    res.x = x;
    res.value = fx;
    res.grad = g;
  }
  res.x = x;
  res.value = fx;
  res.grad = g;
  return res;
}

}  // namespace

BoxConstraints BoxConstraints::unbounded(Eigen::Index n) {
  return {Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf)};
}

BoxConstraints BoxConstraints::nonnegative(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, kInf)};
}

Eigen::VectorXd BoxConstraints::project(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool BoxConstraints::contains(const Eigen::VectorXd& x, double slack) const {
  return ((x.array() >= lower.array() - slack) && (x.array() <= upper.array() + slack))
      .all();
}

MaximizeResult maximize(const Objective& objective, const Eigen::VectorXd& start,
                        const BoxConstraints& box, const MaximizeOptions& opts,
                        const Gradient& gradient) {
  if (box.lower.size() != start.size() || box.upper.size() != start.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "box constraint dimension does not match start");
  }

  InnerResult best = ascend(objective, gradient, start, box, opts);
  int total_iter = best.n_iter;

  // Deterministic perturbed restarts when the first pass stalls.
  SplitRng perturb_rng(0x7265737461727442ULL);
  for (int r = 0; !best.converged && r < opts.max_restarts; ++r) {
    Eigen::VectorXd jitter(start.size());
    for (Eigen::Index i = 0; i < jitter.size(); ++i) {
      jitter[i] = 0.05 * (1.0 + std::abs(best.x[i])) * (perturb_rng.next_uniform() - 0.5);
    }
    InnerResult retry = ascend(objective, gradient, best.x + jitter, box, opts);
    total_iter += retry.n_iter;
    if (retry.value > best.value || retry.converged) best = retry;
  }

  MaximizeResult out;
  out.argmax = best.x;
  out.value = best.value;
  out.converged = best.converged;
  out.n_iter = total_iter;
  out.projected_grad_norm =
      projected_gradient(box, best.x, best.grad).lpNorm<Eigen::Infinity>();
  return out;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * (1.0 + std::abs(x[i]));
    p[i] = x[i] + h;
    const double fp = f(p);
    p[i] = x[i] - h;
    const double fm = f(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = step * (1.0 + std::abs(x[i]));

  const double f0 = f(x);
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = x[i] + h[i];
    const double fp = f(p);
    p[i] = x[i] - h[i];
    const double fm = f(p);
    p[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      p[i] = x[i] + h[i];
      p[j] = x[j] + h[j];
      const double fpp = f(p);
      p[j] = x[j] - h[j];
      const double fpm = f(p);
      p[i] = x[i] - h[i];
      const double fmm = f(p);
      p[j] = x[j] + h[j];
      const double fmp = f(p);
      p[i] = x[i];
      p[j] = x[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return hess;
}

bool covariance_from_loglik(const Objective& loglik, const Eigen::VectorXd& theta_hat,
                            const std::vector<int>& pinned, Eigen::MatrixXd* covariance) {
  const Eigen::Index n = theta_hat.size();
  std::vector<bool> is_pinned(n, false);
  for (int idx : pinned) {
    if (idx >= 0 && idx < n) is_pinned[idx] = true;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_pinned[i]) free.push_back(i);
  }

  Eigen::MatrixXd hess = fd_hessian(loglik, theta_hat);
  Eigen::MatrixXd info(free.size(), free.size());
  for (std::size_t a = 0; a < free.size(); ++a) {
    for (std::size_t b = 0; b < free.size(); ++b) {
      info(a, b) = -hess(free[a], free[b]);
    }
  }
  info = 0.5 * (info + info.transpose()).eval();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  Eigen::MatrixXd cov_free =
      ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  if (!cov_free.allFinite()) return false;

  cov_free = 0.5 * (cov_free + cov_free.transpose()).eval();
  covariance->setZero(n, n);
  for (std::size_t a = 0; a < free.size(); ++a) {
    for (std::size_t b = 0; b < free.size(); ++b) {
      (*covariance)(free[a], free[b]) = cov_free(a, b);
    }
  }
  return true;
}

}  // namespace smartrel
