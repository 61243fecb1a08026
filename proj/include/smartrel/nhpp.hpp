#ifndef SMARTREL_NHPP_HPP
#define SMARTREL_NHPP_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smartrel/ispline.hpp"
#include "smartrel/optimize.hpp"
#include "smartrel/types.hpp"

namespace smartrel::nhpp {

// Baseline cumulative intensity families. power_law is the classic
// (t/eta)^beta; musa_okumoto / gompertz / weibull_srgm are the standard
// software-reliability growth forms; ispline is the monotone spline BCIF.
enum class IntensityTag { power_law, musa_okumoto, gompertz, weibull_srgm, ispline };

IntensityTag tag_from_string(const std::string& name);
std::string tag_name(IntensityTag tag);

struct IntensityModel {
  IntensityTag tag = IntensityTag::power_law;
  Eigen::VectorXd theta;
  std::optional<SplineBasis> basis;  // ispline only

  int n_params() const { return static_cast<int>(theta.size()); }
  // Throws ConstraintViolation when theta leaves the tag's admissible set.
  void validate() const;
};

// Lambda0(t): zero at the origin and nondecreasing for admissible theta.
double baseline_cif(const IntensityModel& model, double t);
// lambda0(t) = d Lambda0 / dt.
double baseline_bif(const IntensityModel& model, double t);

// Derivatives with respect to the natural parameter vector.
Eigen::VectorXd baseline_cif_grad(const IntensityModel& model, double t);
Eigen::VectorXd baseline_bif_grad(const IntensityModel& model, double t);

// Supremum of lambda0 over [lo, hi]; +infinity when the family is unbounded
// at the left edge (power law with beta < 1 at 0). Used as thinning envelope.
double baseline_bif_sup(const IntensityModel& model, double lo, double hi);

// Inverse of Lambda0 restricted to [0, hi]: smallest t with Lambda0(t) >= value.
double baseline_cif_inverse(const IntensityModel& model, double value, double hi);

// I-spline basis values, exposed with the domain check of the basis.
Eigen::VectorXd ispline_basis_eval(const SplineBasis& basis, double t);

// Rate of the step covering t (steps half-open (start, end]); 0 when none.
double exposure_rate_at(const std::vector<ExposureStep>& steps, double t);

// Exposure-weighted cumulative intensity of one unit up to t:
// sum over its steps of rate * [Lambda0(min(end,t)) - Lambda0(min(start,t))].
double unit_cif(const IntensityModel& model, const std::vector<ExposureStep>& steps,
                double t);

// Mileage-adjusted NHPP log-likelihood:
// sum_i { sum_j log[lambda0(t_ij) x_i(t_ij)] - int_0^tau_i lambda0 x_i ds },
// the integral exact per piecewise-constant exposure step.
double nhpp_loglik(const std::vector<RecurrentHistory>& histories,
                   const std::vector<ExposureStep>& exposure,
                   const IntensityModel& model);

// Gradient with respect to the natural parameters.
Eigen::VectorXd nhpp_loglik_grad(const std::vector<RecurrentHistory>& histories,
                                 const std::vector<ExposureStep>& exposure,
                                 const IntensityModel& model);

struct FitNhppOptions {
  MaximizeOptions optimize;
  int n_spline_basis = 5;
  // Explicit interior knots override the event-quantile default.
  std::optional<std::vector<double>> interior_knots;
};

struct NhppFit {
  FitResult result;  // theta_hat in natural parameters
  IntensityModel model;
};

NhppFit fit_nhpp(const std::vector<RecurrentHistory>& histories,
                 const std::vector<ExposureStep>& exposure, IntensityTag tag,
                 const FitNhppOptions& opts = FitNhppOptions{});

struct CurvePoint {
  double t = 0.0;
  double expected = 0.0;
  double observed = 0.0;
};

// Fig. 5(a)-style curve: expected(t) = sum_i Lambda_i(min(t, tau_i)) under the
// fitted model with each unit's exposure; observed(t) = events up to t.
std::vector<CurvePoint> expected_vs_observed(const NhppFit& fit,
                                             const std::vector<RecurrentHistory>& histories,
                                             const std::vector<ExposureStep>& exposure,
                                             const std::vector<double>& t_grid);

struct PointwiseBands {
  std::vector<double> t;
  std::vector<double> lower;   // pointwise envelope of Lambda0
  std::vector<double> upper;
  int n_refit_failures = 0;
  int n_replicates = 0;
};

// Parametric bootstrap: simulate B datasets from the fitted model under the
// observed exposure, refit, and take the pointwise level-quantile envelope of
// Lambda0. Throws RefitFailureRateExceeded when more than 5% of refits fail.
PointwiseBands bootstrap_pointwise_bands(const NhppFit& fit,
                                         const std::vector<RecurrentHistory>& histories,
                                         const std::vector<ExposureStep>& exposure,
                                         const std::vector<double>& t_grid, int B,
                                         double level, std::uint64_t seed);

// Same bootstrap, enveloping the exposure-weighted expected-event curve
// sum_i Lambda_i(min(t, tau_i)) instead of the baseline Lambda0; this is the
// band drawn around an expected-versus-observed plot.
PointwiseBands bootstrap_expected_bands(const NhppFit& fit,
                                        const std::vector<RecurrentHistory>& histories,
                                        const std::vector<ExposureStep>& exposure,
                                        const std::vector<double>& t_grid, int B,
                                        double level, std::uint64_t seed);

}  // namespace smartrel::nhpp

#endif  // SMARTREL_NHPP_HPP
