#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "smartrel/common.hpp"
#include "smartrel/dataset.hpp"
#include "smartrel/optimize.hpp"
#include "smartrel/quadrature.hpp"
#include "smartrel/rng.hpp"
#include "smartrel/special.hpp"

using namespace smartrel;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("lifetime csv parses failures and censored rows") {
  const auto path = write_temp("rc_lifetime.csv",
                               "unit_id,time,status\nu1,3.2,1\nu2,5.0,0\n");
  const auto records = load_lifetime_csv(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].unit_id == "u1");
  CHECK(records[0].time == doctest::Approx(3.2));
  CHECK(records[0].status == 1);
  CHECK(records[1].status == 0);
}

TEST_CASE("overlapping exposure steps are rejected") {
  const auto path = write_temp(
      "rc_exposure.csv", "unit_id,start,end,rate\nu1,0,10,1.5\nu1,5,15,2.0\n");
  CHECK_THROWS_WITH_AS(load_exposure_csv(path),
                       doctest::Contains("overlapping"), ValidationError);
}

TEST_CASE("event exactly at follow_up_end violates the strict ordering") {
  std::vector<EventRow> events{{"u1", 10.0}};
  std::vector<FollowupRow> followups{{"u1", 10.0}};
  CHECK_THROWS_AS(build_histories(events, followups), ValidationError);
}

TEST_CASE("duplicate event times within a unit are rejected") {
  std::vector<EventRow> events{{"u1", 4.0}, {"u1", 4.0}};
  std::vector<FollowupRow> followups{{"u1", 10.0}};
  CHECK_THROWS_AS(build_histories(events, followups), ValidationError);
}

TEST_CASE("event outside positive exposure is rejected at assembly") {
  std::vector<EventRow> events{{"u1", 4.0}};
  std::vector<FollowupRow> followups{{"u1", 10.0}};
  std::vector<ExposureStep> exposure{{"u1", 0.0, 3.0, 1.0}, {"u1", 3.0, 10.0, 0.0}};
  CHECK_THROWS_AS(build_histories(events, followups, &exposure), ValidationError);
}

TEST_CASE("malformed rows are reported with their line number") {
  const auto path =
      write_temp("rc_bad.csv", "unit_id,time,status\nu1,3.2,1\nu2,oops,0\n");
  CHECK_THROWS_WITH_AS(load_lifetime_csv(path), doctest::Contains(":3"),
                       ValidationError);
}

TEST_CASE("empty dataset is its own error") {
  const auto path = write_temp("rc_empty.csv", "unit_id,time,status\n");
  CHECK_THROWS_AS(load_lifetime_csv(path), ValidationError);
}

TEST_CASE("csv round trip preserves values") {
  std::vector<ExposureStep> steps{{"a", 0.0, 1.0 / 3.0, 2.7}, {"a", 1.0 / 3.0, 0.9, 0.125}};
  const auto path = (std::filesystem::temp_directory_path() / "rc_rt.csv").string();
  write_exposure_csv(path, steps);
  const auto loaded = load_exposure_csv(path);
  REQUIRE(loaded.size() == steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(loaded[i].start == steps[i].start);
    CHECK(loaded[i].end == steps[i].end);
    CHECK(loaded[i].rate == steps[i].rate);
  }
}

TEST_CASE("maximize solves the unconstrained quadratic") {
  Objective f = [](const Eigen::VectorXd& x) { return -(x[0] - 2.0) * (x[0] - 2.0); };
  const auto res = maximize(f, Eigen::VectorXd::Zero(1), BoxConstraints::unbounded(1));
  CHECK(res.converged);
  CHECK(res.argmax[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("maximize respects an active nonnegativity constraint") {
  Objective f = [](const Eigen::VectorXd& x) { return -(x[0] + 1.0) * (x[0] + 1.0); };
  const auto res = maximize(f, Eigen::VectorXd::Constant(1, 3.0),
                            BoxConstraints::nonnegative(1));
  CHECK(res.converged);
  CHECK(res.argmax[0] == doctest::Approx(0.0));
}

TEST_CASE("maximize climbs the negated Rosenbrock valley") {
  Objective f = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return -(a * a + 100.0 * b * b);
  };
  Eigen::VectorXd start(2);
  start << -1.2, 1.0;
  MaximizeOptions opts;
  opts.max_iter = 2000;
  const auto res = maximize(f, start, BoxConstraints::unbounded(2), opts);
  CHECK(res.converged);
  CHECK(res.argmax[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(res.argmax[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("maximize rejects a non-finite start") {
  Objective f = [](const Eigen::VectorXd& x) { return std::log(x[0]); };
  CHECK_THROWS_AS(maximize(f, Eigen::VectorXd::Zero(1), BoxConstraints::unbounded(1)),
                  ValidationError);
}

TEST_CASE("maximize is deterministic") {
  Objective f = [](const Eigen::VectorXd& x) {
    return -std::pow(x[0] - 0.7, 4) - 0.3 * std::cos(5 * x[0]);
  };
  const auto a = maximize(f, Eigen::VectorXd::Zero(1), BoxConstraints::unbounded(1));
  const auto b = maximize(f, Eigen::VectorXd::Zero(1), BoxConstraints::unbounded(1));
  CHECK(a.argmax[0] == b.argmax[0]);
  CHECK(a.value == b.value);
}

TEST_CASE("gauss-hermite order 1 is the midpoint rule") {
  const auto rule = gauss_hermite_nodes(1);
  CHECK(rule.nodes[0] == 0.0);
  CHECK(rule.weights[0] == doctest::Approx(kSqrtPi).epsilon(1e-14));
}

TEST_CASE("gauss-hermite order 2 has the textbook nodes") {
  const auto rule = gauss_hermite_nodes(2);
  CHECK(rule.nodes[0] == doctest::Approx(-1.0 / kSqrt2).epsilon(1e-12));
  CHECK(rule.nodes[1] == doctest::Approx(1.0 / kSqrt2).epsilon(1e-12));
  CHECK(rule.weights[0] == doctest::Approx(kSqrtPi / 2).epsilon(1e-12));
  // integral of exp(-x^2) x^2 = sqrt(pi)/2
  double integral = 0.0;
  for (int i = 0; i < 2; ++i) integral += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
  CHECK(integral == doctest::Approx(kSqrtPi / 2).epsilon(1e-12));
}

TEST_CASE("gauss-hermite weights always sum to sqrt(pi)") {
  for (int order : {3, 7, 20, 41, 100}) {
    const auto rule = gauss_hermite_nodes(order);
    CHECK(rule.weights.sum() == doctest::Approx(kSqrtPi).epsilon(1e-12));
    // symmetry
    for (int i = 0; i < order; ++i) {
      CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[order - 1 - i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gauss-hermite order is range checked") {
  CHECK_THROWS_AS(gauss_hermite_nodes(0), ValidationError);
  CHECK_THROWS_AS(gauss_hermite_nodes(101), ValidationError);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0 - 1e-10}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0));
}

TEST_CASE("split rng streams are deterministic and decorrelated") {
  SplitRng a(42);
  SplitRng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  SplitRng root(7);
  SplitRng s1 = root.split(1);
  SplitRng s2 = root.split(2);
  double sum12 = 0.0;
  double sum1 = 0.0;
  double sum2 = 0.0;
  double sq1 = 0.0;
  double sq2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u1 = s1.next_uniform();
    const double u2 = s2.next_uniform();
    sum12 += u1 * u2;
    sum1 += u1;
    sum2 += u2;
    sq1 += u1 * u1;
    sq2 += u2 * u2;
  }
  const double cov = sum12 / n - (sum1 / n) * (sum2 / n);
  const double sd1 = std::sqrt(sq1 / n - (sum1 / n) * (sum1 / n));
  const double sd2 = std::sqrt(sq2 / n - (sum2 / n) * (sum2 / n));
  CHECK(std::abs(cov / (sd1 * sd2)) < 0.03);
}
