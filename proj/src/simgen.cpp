#include "smartrel/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartrel/common.hpp"
#include "smartrel/special.hpp"

namespace smartrel::simgen {

namespace {

// Thin a homogeneous envelope on (lo, hi] down to rate * lambda0(t).
void thin_interval(const nhpp::IntensityModel& model, double rate, double lo, double hi,
                   double envelope, SplitRng* rng, std::vector<double>* events) {
  if (envelope <= 0.0) return;
  double t = lo;
  while (true) {
    t += rng->next_exponential() / envelope;
    if (t > hi) break;
    const double accept = rate * nhpp::baseline_bif(model, t) / envelope;
    if (rng->next_uniform() <= accept) events->push_back(t);
  }
}

// Exact draw on (lo, hi] by the time-change t = Lambda^{-1}(arrival), for the
// sliver where the intensity has no finite supremum.
void invert_interval(const nhpp::IntensityModel& model, double rate, double lo, double hi,
                     SplitRng* rng, std::vector<double>* events) {
  const double base = rate * nhpp::baseline_cif(model, lo);
  const double total = rate * nhpp::baseline_cif(model, hi);
  double arrival = base;
  while (true) {
    arrival += rng->next_exponential();
    if (arrival > total) break;
    const double t = nhpp::baseline_cif_inverse(model, arrival / rate, hi);
    if (t > lo && t <= hi) events->push_back(t);
  }
}

}  // namespace

RecurrentHistory simulate_nhpp_with_rng(const nhpp::IntensityModel& model,
                                        const std::vector<ExposureStep>& exposure,
                                        double follow_up, SplitRng* rng) {
  model.validate();
  if (!(follow_up > 0.0)) {
    throw ValidationError(ErrorCode::InvalidConfig, "follow_up must be positive");
  }
  std::vector<ExposureStep> steps = exposure;
  std::sort(steps.begin(), steps.end(),
            [](const ExposureStep& a, const ExposureStep& b) { return a.start < b.start; });

  RecurrentHistory history;
  history.follow_up_end = follow_up;
  for (const auto& step : steps) {
    const double lo = std::max(step.start, 0.0);
    const double hi = std::min(step.end, follow_up);
    if (hi <= lo || step.rate <= 0.0) continue;

    double envelope = step.rate * nhpp::baseline_bif_sup(model, lo, hi);
    if (std::isfinite(envelope)) {
      thin_interval(model, step.rate, lo, hi, envelope, rng, &history.event_times);
      continue;
    }
    if (lo > 0.0) {
      // Singular inside the positive axis would mean a non-integrable
      // intensity; none of the supported families do that.
      throw ValidationError(ErrorCode::UnboundedIntensity,
                            "intensity has no finite bound on an interior step");
    }
    // Unbounded only at t = 0: invert the leading sliver, thin the rest.
    const double split = std::min(hi, 0.05 * follow_up);
    invert_interval(model, step.rate, lo, split, rng, &history.event_times);
    if (split < hi) {
      envelope = step.rate * nhpp::baseline_bif_sup(model, split, hi);
      if (!std::isfinite(envelope)) {
        throw ValidationError(ErrorCode::UnboundedIntensity,
                              "intensity has no finite bound beyond the origin");
      }
      thin_interval(model, step.rate, split, hi, envelope, rng, &history.event_times);
    }
  }
  std::sort(history.event_times.begin(), history.event_times.end());
  // Strict ordering: nudge exact ties apart is not meaningful for continuous
  // models; a duplicate draw would violate the history invariant downstream.
  history.event_times.erase(
      std::unique(history.event_times.begin(), history.event_times.end()),
      history.event_times.end());
  // Events exactly at follow_up_end are excluded by the strict inequality.
  while (!history.event_times.empty() && history.event_times.back() >= follow_up) {
    history.event_times.pop_back();
  }
  return history;
}

RecurrentHistory simulate_nhpp(const nhpp::IntensityModel& model,
                               const std::vector<ExposureStep>& exposure,
                               double follow_up, std::uint64_t seed) {
  SplitRng rng(seed);
  return simulate_nhpp_with_rng(model, exposure, follow_up, &rng);
}

std::vector<LifetimeRecord> simulate_lifetime(distfit::LifetimeFamily family,
                                              const distfit::LocScaleParams& params,
                                              int n, std::optional<double> censor_time,
                                              std::uint64_t seed) {
  if (params.sigma <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveSigma, "sigma must be positive");
  }
  if (censor_time && *censor_time <= 0.0) {
    throw ValidationError(ErrorCode::NonPositiveTime, "censor_time must be positive");
  }
  SplitRng root(seed);
  std::vector<LifetimeRecord> records;
  records.reserve(n);
  for (int i = 0; i < n; ++i) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(i));
    const double u = rng.next_uniform();
    const double z = family == distfit::LifetimeFamily::weibull ? sev_quantile(u)
                                                                : norm_quantile(u);
    const double t = std::exp(params.mu + params.sigma * z);
    LifetimeRecord rec;
    rec.unit_id = "u" + std::to_string(i + 1);
    if (censor_time && t > *censor_time) {
      rec.time = *censor_time;
      rec.status = 0;
    } else {
      rec.time = t;
      rec.status = 1;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<DegradationPath> simulate_degradation(const degpath::PathModel& model,
                                                  const degpath::GpmParams& params,
                                                  int n_units,
                                                  const std::vector<double>& time_grid,
                                                  std::uint64_t seed) {
  params.validate(model);
  if (time_grid.empty()) {
    throw ValidationError(ErrorCode::InvalidConfig, "time grid must be nonempty");
  }
  for (std::size_t i = 1; i < time_grid.size(); ++i) {
    if (time_grid[i] <= time_grid[i - 1]) {
      throw ValidationError(ErrorCode::InvalidConfig, "time grid must be increasing");
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(params.sigma);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(ErrorCode::NonPDSigma, "Sigma is not positive definite");
  }
  const Eigen::MatrixXd scale = Eigen::MatrixXd(llt.matrixL());
  const double sd_eps = std::sqrt(params.sigma_eps2);

  SplitRng root(seed);
  std::vector<DegradationPath> paths;
  paths.reserve(n_units);
  for (int i = 0; i < n_units; ++i) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd gamma = scale * rng.normal_vector(model.random_dim());
    DegradationPath path;
    path.unit_id = "u" + std::to_string(i + 1);
    path.times = time_grid;
    path.values.reserve(time_grid.size());
    for (double t : time_grid) {
      path.values.push_back(model.mean(t, params.alpha, gamma) +
                            sd_eps * rng.next_normal());
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<ExposureStep> apply_use_rate_acceleration(std::vector<ExposureStep> exposure,
                                                      double factor) {
  if (!(factor > 0.0)) {
    throw ValidationError(ErrorCode::NonPositiveFactor,
                          "acceleration factor must be positive");
  }
  for (auto& step : exposure) step.rate *= factor;
  return exposure;
}

}  // namespace smartrel::simgen
