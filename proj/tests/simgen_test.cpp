#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "smartrel/common.hpp"
#include "smartrel/distfit.hpp"
#include "smartrel/simgen.hpp"
#include "smartrel/special.hpp"

using namespace smartrel;
using namespace smartrel::simgen;

namespace {

nhpp::IntensityModel power_law(double beta, double eta) {
  nhpp::IntensityModel model;
  model.tag = nhpp::IntensityTag::power_law;
  model.theta = Eigen::Vector2d(beta, eta);
  return model;
}

std::vector<ExposureStep> unit_exposure(double end, double rate = 1.0) {
  return {{"u", 0.0, end, rate}};
}

}  // namespace

TEST_CASE("homogeneous counts have the poisson mean") {
  const auto model = power_law(1.0, 1.0);
  const double tau = 100.0;
  const int n_seeds = 5000;
  double total = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    total += static_cast<double>(
        simulate_nhpp(model, unit_exposure(tau), tau, 1000 + s).event_times.size());
  }
  const double mean = total / n_seeds;
  const double se = std::sqrt(tau / n_seeds);
  CHECK(std::abs(mean - tau) <= 3.0 * se);
}

TEST_CASE("zero exposure produces no events") {
  const auto model = power_law(1.0, 1.0);
  const auto history = simulate_nhpp(model, unit_exposure(50.0, 0.0), 50.0, 4);
  CHECK(history.event_times.empty());
}

TEST_CASE("counts in disjoint intervals are uncorrelated") {
  const auto model = power_law(1.0, 2.0);
  const double tau = 100.0;
  const int n_seeds = 5000;
  std::vector<double> first(n_seeds);
  std::vector<double> second(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    const auto history = simulate_nhpp(model, unit_exposure(tau), tau, 7000 + s);
    first[s] = static_cast<double>(
        std::count_if(history.event_times.begin(), history.event_times.end(),
                      [](double t) { return t <= 50.0; }));
    second[s] = static_cast<double>(history.event_times.size()) - first[s];
  }
  double m1 = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    m1 += first[s];
    m2 += second[s];
  }
  m1 /= n_seeds;
  m2 /= n_seeds;
  double cov = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    cov += (first[s] - m1) * (second[s] - m2);
    v1 += (first[s] - m1) * (first[s] - m1);
    v2 += (second[s] - m2) * (second[s] - m2);
  }
  CHECK(std::abs(cov / std::sqrt(v1 * v2)) < 0.05);
}

TEST_CASE("decreasing power law with events near zero still matches its mean") {
  // beta < 1 exercises the singular-left-edge path.
  const auto model = power_law(0.7, 2.0);
  const double tau = 30.0;
  const double expected = nhpp::baseline_cif(model, tau);
  const int n_seeds = 3000;
  double total = 0.0;
  double earliest = tau;
  for (int s = 0; s < n_seeds; ++s) {
    const auto history = simulate_nhpp(model, unit_exposure(tau), tau, 40000 + s);
    total += static_cast<double>(history.event_times.size());
    for (double t : history.event_times) {
      CHECK(t > 0.0);
      CHECK(t < tau);
      earliest = std::min(earliest, t);
    }
  }
  const double mean = total / n_seeds;
  const double se = std::sqrt(expected / n_seeds);
  CHECK(std::abs(mean - expected) <= 3.0 * se);
  // the sliver near zero must not be skipped: the intensity is largest there
  CHECK(earliest < 0.05);
}

TEST_CASE("unimodal and s-shaped families hit their expected counts") {
  // gompertz has a bell-shaped intensity, weibull_srgm an interior mode when
  // theta3 > 1; both exercise the interior-maximum envelope.
  nhpp::IntensityModel gompertz;
  gompertz.tag = nhpp::IntensityTag::gompertz;
  gompertz.theta = Eigen::Vector3d(12.0, 0.9, 0.3);
  nhpp::IntensityModel weibull;
  weibull.tag = nhpp::IntensityTag::weibull_srgm;
  weibull.theta = Eigen::Vector3d(9.0, 0.05, 1.6);
  const double tau = 40.0;
  for (const auto& model : {gompertz, weibull}) {
    const double expected = nhpp::baseline_cif(model, tau);
    const int n_seeds = 3000;
    double total = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      total += static_cast<double>(
          simulate_nhpp(model, unit_exposure(tau), tau, 660000 + s).event_times.size());
    }
    const double mean = total / n_seeds;
    const double se = std::sqrt(expected / n_seeds);
    CHECK(std::abs(mean - expected) <= 3.0 * se);
  }
}

TEST_CASE("events are confined to positive-rate steps") {
  const auto model = power_law(1.0, 1.0);
  std::vector<ExposureStep> gaps{{"u", 0.0, 10.0, 2.0},
                                 {"u", 10.0, 20.0, 0.0},
                                 {"u", 20.0, 30.0, 1.0}};
  const auto history = simulate_nhpp(model, gaps, 30.0, 11);
  for (double t : history.event_times) {
    CHECK((t <= 10.0 || t > 20.0));
  }
}

TEST_CASE("simulation is reproducible for a fixed seed") {
  const auto model = power_law(1.3, 4.0);
  const auto a = simulate_nhpp(model, unit_exposure(50.0, 0.7), 50.0, 99);
  const auto b = simulate_nhpp(model, unit_exposure(50.0, 0.7), 50.0, 99);
  REQUIRE(a.event_times.size() == b.event_times.size());
  for (std::size_t i = 0; i < a.event_times.size(); ++i) {
    CHECK(a.event_times[i] == b.event_times[i]);
  }
}

TEST_CASE("lifetime draws hit the median and the z=0 quantile") {
  using distfit::LifetimeFamily;
  const distfit::LocScaleParams params{1.0, 0.5};
  const int n = 100000;
  auto lognormal = simulate_lifetime(LifetimeFamily::lognormal, params, n,
                                     std::nullopt, 2024);
  std::vector<double> times;
  for (const auto& rec : lognormal) times.push_back(rec.time);
  std::sort(times.begin(), times.end());
  const double median = times[n / 2];
  CHECK(median == doctest::Approx(std::exp(1.0)).epsilon(0.01));

  auto weibull =
      simulate_lifetime(LifetimeFamily::weibull, params, n, std::nullopt, 2025);
  double below = 0.0;
  for (const auto& rec : weibull) below += rec.time <= std::exp(1.0) ? 1.0 : 0.0;
  CHECK(below / n == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.005 / (1.0 - std::exp(-1.0))));
}

TEST_CASE("kolmogorov-smirnov distance to the true cdf is small") {
  using distfit::LifetimeFamily;
  const distfit::LocScaleParams params{0.5, 0.8};
  const int n = 10000;
  for (auto family : {LifetimeFamily::weibull, LifetimeFamily::lognormal}) {
    auto sample = simulate_lifetime(family, params, n, std::nullopt, 555);
    std::vector<double> times;
    for (const auto& rec : sample) times.push_back(rec.time);
    std::sort(times.begin(), times.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
      const double cdf = distfit::cdf_at(params, family, times[i]);
      ks = std::max(ks, std::abs(cdf - (i + 1.0) / n));
      ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / n));
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("censoring truncates at the censor time") {
  using distfit::LifetimeFamily;
  auto sample = simulate_lifetime(LifetimeFamily::weibull, {1.0, 0.5}, 2000, 2.5, 9);
  int censored = 0;
  for (const auto& rec : sample) {
    CHECK(rec.time <= 2.5);
    if (rec.status == 0) {
      ++censored;
      CHECK(rec.time == 2.5);
    }
  }
  CHECK(censored > 0);
}

TEST_CASE("degradation with no randomness reproduces the fixed path") {
  degpath::PathModel model{degpath::PathTag::random_intercept_slope};
  degpath::GpmParams params;
  params.alpha = Eigen::Vector2d(2.0, 0.5);
  params.sigma = 1e-30 * Eigen::Matrix2d::Identity();
  params.sigma_eps2 = 1e-30;
  auto paths = simulate_degradation(model, params, 3, {1.0, 2.0}, 77);
  for (const auto& p : paths) {
    CHECK(p.values[0] == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(p.values[1] == doctest::Approx(3.0).epsilon(1e-6));
  }
}

TEST_CASE("noiseless slope spread matches the generating variance") {
  degpath::PathModel model{degpath::PathTag::random_slope};
  degpath::GpmParams params;
  params.alpha = Eigen::VectorXd::Constant(1, 1.0);
  params.sigma = Eigen::MatrixXd::Constant(1, 1, 0.09);
  params.sigma_eps2 = 1e-20;
  auto paths = simulate_degradation(model, params, 2000, {2.0}, 31);
  double mean = 0.0;
  for (const auto& p : paths) mean += p.values[0] / 2.0;
  mean /= paths.size();
  double var = 0.0;
  for (const auto& p : paths) {
    var += (p.values[0] / 2.0 - mean) * (p.values[0] / 2.0 - mean);
  }
  var /= (paths.size() - 1);
  CHECK(var == doctest::Approx(0.09).epsilon(0.10));
}

TEST_CASE("degradation simulation is seed-deterministic") {
  degpath::PathModel model{degpath::PathTag::random_slope};
  degpath::GpmParams params;
  params.alpha = Eigen::VectorXd::Constant(1, 1.0);
  params.sigma = Eigen::MatrixXd::Constant(1, 1, 0.09);
  params.sigma_eps2 = 0.01;
  auto a = simulate_degradation(model, params, 5, {1.0, 2.0, 3.0}, 4141);
  auto b = simulate_degradation(model, params, 5, {1.0, 2.0, 3.0}, 4141);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].values.size(); ++j) {
      CHECK(a[i].values[j] == b[i].values[j]);
    }
  }
}

TEST_CASE("use-rate acceleration semantics") {
  std::vector<ExposureStep> exposure{{"u", 0.0, 10.0, 1.5}, {"u", 10.0, 20.0, 0.5}};
  const auto same = apply_use_rate_acceleration(exposure, 1.0);
  CHECK(same[0].rate == 1.5);
  CHECK(same[1].rate == 0.5);
  const auto faster = apply_use_rate_acceleration(exposure, 10.0);
  CHECK(faster[0].rate == 15.0);
  CHECK(faster[1].rate == 5.0);
  CHECK_THROWS_AS(apply_use_rate_acceleration(exposure, 0.0), ValidationError);
  CHECK_THROWS_AS(apply_use_rate_acceleration(exposure, -2.0), ValidationError);
}

TEST_CASE("accelerated exposure scales the mean count by the factor") {
  const auto model = power_law(1.0, 5.0);
  const double tau = 20.0;
  const auto base = unit_exposure(tau, 0.5);
  const auto fast = apply_use_rate_acceleration(base, 10.0);
  const int n_seeds = 2000;
  double base_total = 0.0;
  double fast_total = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    base_total += static_cast<double>(
        simulate_nhpp(model, base, tau, 100000 + s).event_times.size());
    fast_total += static_cast<double>(
        simulate_nhpp(model, fast, tau, 200000 + s).event_times.size());
  }
  CHECK(fast_total / base_total == doctest::Approx(10.0).epsilon(0.05));
}
