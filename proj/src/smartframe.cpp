#include "smartrel/smartframe.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "smartrel/common.hpp"
#include "smartrel/rng.hpp"
#include "smartrel/simgen.hpp"
#include "smartrel/special.hpp"

namespace smartrel::smartframe {

const Eigen::VectorXd& GatingModel::beta_for(const std::string& label) const {
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == label) return betas[j];
  }
  throw ValidationError(ErrorCode::InvalidConfig, "no gate for process '" + label + "'");
}

double gate_prob(const Eigen::VectorXd& z, const Eigen::VectorXd& beta) {
  if (beta.size() != z.size() + 1) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "beta must have one more entry (intercept) than z");
  }
  if (!z.allFinite() || !beta.allFinite()) {
    throw ValidationError(ErrorCode::InvalidConfig, "gate inputs must be finite");
  }
  return logistic(beta[0] + z.dot(beta.tail(z.size())));
}

double composite_intensity(const std::vector<InterruptiveProcess>& processes,
                           const GatingModel& gating, double t,
                           const Eigen::VectorXd& z) {
  if (t < 0.0) {
    throw ValidationError(ErrorCode::OutOfDomain, "composite intensity needs t >= 0");
  }
  double total = 0.0;
  for (const auto& proc : processes) {
    proc.intensity.validate();
    const double rate = nhpp::exposure_rate_at(proc.exposure, t);
    if (rate <= 0.0) continue;
    total += nhpp::baseline_bif(proc.intensity, t) * rate *
             gate_prob(z, gating.beta_for(proc.label));
  }
  return total;
}

std::vector<LabeledEvent> simulate_smart(const std::vector<InterruptiveProcess>& processes,
                                         const GatingModel& gating,
                                         const Eigen::VectorXd& z, double horizon,
                                         std::uint64_t seed) {
  if (!(horizon > 0.0)) {
    throw ValidationError(ErrorCode::InvalidConfig, "horizon must be positive");
  }
  SplitRng root(seed);
  std::vector<LabeledEvent> stream;
  for (std::size_t j = 0; j < processes.size(); ++j) {
    const auto& proc = processes[j];
    const double p_fail = gate_prob(z, gating.beta_for(proc.label));
    SplitRng rng = root.split(static_cast<std::uint64_t>(j));
    const RecurrentHistory arrivals = simgen::simulate_nhpp_with_rng(
        proc.intensity, proc.exposure, horizon, &rng);
    for (double t : arrivals.event_times) {
      LabeledEvent event;
      event.time = t;
      event.label = proc.label;
      event.failed = rng.next_uniform() < p_fail;
      stream.push_back(std::move(event));
    }
  }
  std::sort(stream.begin(), stream.end(),
            [](const LabeledEvent& a, const LabeledEvent& b) {
              return a.time != b.time ? a.time < b.time : a.label < b.label;
            });
  return stream;
}

double gate_loglik(const Eigen::MatrixXd& design, const std::vector<int>& failed,
                   const Eigen::VectorXd& beta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double eta = design.row(i).dot(beta);
    // y*eta - log(1 + e^eta), stable in both tails.
    ll += failed[i] * eta - log1pexp(eta);
  }
  return ll;
}

Eigen::VectorXd gate_loglik_grad(const Eigen::MatrixXd& design,
                                 const std::vector<int>& failed,
                                 const Eigen::VectorXd& beta) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double p = logistic(design.row(i).dot(beta));
    g += (failed[i] - p) * design.row(i).transpose();
  }
  return g;
}

std::vector<GateFit> fit_gates(const std::vector<LabeledOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, "no labeled outcomes");
  }
  std::map<std::string, std::vector<const LabeledOutcome*>> groups;
  std::vector<std::string> order;
  for (const auto& outcome : outcomes) {
    auto [it, inserted] = groups.try_emplace(outcome.label);
    if (inserted) order.push_back(outcome.label);
    it->second.push_back(&outcome);
  }

  std::vector<GateFit> fits;
  for (const auto& label : order) {
    const auto& rows = groups[label];
    const auto n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index dim = rows.front()->z.size() + 1;
    int n_failed = 0;
    Eigen::MatrixXd design(n, dim);
    std::vector<int> y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rows[i]->z.size() + 1 != dim) {
        throw ValidationError(ErrorCode::DimensionMismatch,
                              "covariate dimension varies within process " + label);
      }
      design(i, 0) = 1.0;
      design.row(i).tail(dim - 1) = rows[i]->z.transpose();
      y[i] = rows[i]->failed ? 1 : 0;
      n_failed += y[i];
    }
    if (n < dim) {
      throw ValidationError(ErrorCode::TooFewOutcomes,
                            "process " + label + " has fewer outcomes than coefficients");
    }
    if (n_failed == 0 || n_failed == static_cast<int>(n)) {
      throw ValidationError(ErrorCode::CompleteSeparation,
                            "process " + label + " observed only one outcome");
    }

    GateFit fit;
    fit.label = label;
    fit.n = static_cast<int>(n);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd info(dim, dim);
    for (int it = 0; it < 100; ++it) {
      fit.n_iter = it + 1;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
      info.setZero();
      double max_eta = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double eta = design.row(i).dot(beta);
        max_eta = std::max(max_eta, std::abs(eta));
        const double p = logistic(eta);
        g += (y[i] - p) * design.row(i).transpose();
        info += p * (1.0 - p) * design.row(i).transpose() * design.row(i);
      }
      if (g.lpNorm<Eigen::Infinity>() < 1e-10) {
        fit.converged = true;
        break;
      }
      if (max_eta > 30.0) {
        throw ValidationError(ErrorCode::CompleteSeparation,
                              "process " + label + " is completely separated");
      }
      const Eigen::VectorXd step = info.ldlt().solve(g);
      if (!step.allFinite()) {
        throw ValidationError(ErrorCode::CompleteSeparation,
                              "singular information for process " + label);
      }
      beta += step;
    }
    if (!fit.converged) {
      throw ConvergenceError(ErrorCode::NonConvergence,
                             "gate fit for process " + label + " did not converge");
    }
    fit.beta = beta;
    fit.loglik = gate_loglik(design, y, beta);
    const Eigen::MatrixXd cov =
        info.ldlt().solve(Eigen::MatrixXd::Identity(dim, dim));
    fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fits.push_back(std::move(fit));
  }
  return fits;
}

}  // namespace smartrel::smartframe
