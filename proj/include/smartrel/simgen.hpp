#ifndef SMARTREL_SIMGEN_HPP
#define SMARTREL_SIMGEN_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "smartrel/degpath.hpp"
#include "smartrel/distfit.hpp"
#include "smartrel/nhpp.hpp"
#include "smartrel/rng.hpp"
#include "smartrel/types.hpp"

namespace smartrel::simgen {

// NHPP events for one unit with piecewise-constant exposure, by
// Lewis-Shedler thinning with the analytic intensity supremum per step as
// envelope. A step whose supremum is infinite at t = 0 (decreasing power law)
// is split: the leading sliver is drawn exactly by inverting the cumulative
// intensity, the remainder is thinned.
RecurrentHistory simulate_nhpp(const nhpp::IntensityModel& model,
                               const std::vector<ExposureStep>& exposure,
                               double follow_up, std::uint64_t seed);
RecurrentHistory simulate_nhpp_with_rng(const nhpp::IntensityModel& model,
                                        const std::vector<ExposureStep>& exposure,
                                        double follow_up, SplitRng* rng);

// Lifetimes t = exp(mu + sigma * Qinv(U)), censored at censor_time when given.
std::vector<LifetimeRecord> simulate_lifetime(distfit::LifetimeFamily family,
                                              const distfit::LocScaleParams& params,
                                              int n, std::optional<double> censor_time,
                                              std::uint64_t seed);

// Degradation paths: gamma_i ~ MVN(0, Sigma), iid N(0, sigma_eps2) noise.
std::vector<DegradationPath> simulate_degradation(const degpath::PathModel& model,
                                                  const degpath::GpmParams& params,
                                                  int n_units,
                                                  const std::vector<double>& time_grid,
                                                  std::uint64_t seed);

// Use-rate acceleration: every exposure rate multiplied by factor a > 0.
std::vector<ExposureStep> apply_use_rate_acceleration(std::vector<ExposureStep> exposure,
                                                      double factor);

}  // namespace smartrel::simgen

#endif  // SMARTREL_SIMGEN_HPP
