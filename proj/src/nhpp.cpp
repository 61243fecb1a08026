#include "smartrel/nhpp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "smartrel/common.hpp"
#include "smartrel/dataset.hpp"
#include "smartrel/rng.hpp"
#include "smartrel/simgen.hpp"
#include "smartrel/special.hpp"

namespace smartrel::nhpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(ErrorCode::ConstraintViolation, what);
}

// Quadratic through (lo,f0), (mid,f1), (hi,f2) maximized over [lo,hi].
double quadratic_max(double lo, double hi, double f0, double f1, double f2) {
  double best = std::max({f0, f1, f2});
  const double h = 0.5 * (hi - lo);
  if (h <= 0.0) return best;
  // f(x) = a u^2 + b u + c on u in [-1,1] with u = (x - mid)/h.
  const double a = 0.5 * (f0 + f2) - f1;
  const double b = 0.5 * (f2 - f0);
  if (a < 0.0) {
    const double u = -b / (2.0 * a);
    if (u > -1.0 && u < 1.0) {
      best = std::max(best, a * u * u + b * u + f1);
    }
  }
  return best;
}

}  // namespace

IntensityTag tag_from_string(const std::string& name) {
  if (name == "power_law") return IntensityTag::power_law;
  if (name == "musa_okumoto") return IntensityTag::musa_okumoto;
  if (name == "gompertz") return IntensityTag::gompertz;
  if (name == "weibull_srgm") return IntensityTag::weibull_srgm;
  if (name == "ispline") return IntensityTag::ispline;
  throw ValidationError(ErrorCode::InvalidConfig, "unknown intensity tag '" + name + "'");
}

std::string tag_name(IntensityTag tag) {
  switch (tag) {
    case IntensityTag::power_law: return "power_law";
    case IntensityTag::musa_okumoto: return "musa_okumoto";
    case IntensityTag::gompertz: return "gompertz";
    case IntensityTag::weibull_srgm: return "weibull_srgm";
    case IntensityTag::ispline: return "ispline";
  }
  return "unknown";
}

void IntensityModel::validate() const {
  switch (tag) {
    case IntensityTag::power_law:
      require(theta.size() == 2, "power_law needs (beta, eta)");
      require(theta[0] > 0.0 && theta[1] > 0.0, "power_law requires beta>0, eta>0");
      break;
    case IntensityTag::musa_okumoto:
      require(theta.size() == 2, "musa_okumoto needs (theta1, theta2)");
      require(theta[0] > 0.0 && theta[1] > 0.0, "musa_okumoto requires theta1,theta2>0");
      break;
    case IntensityTag::gompertz:
      require(theta.size() == 3, "gompertz needs (theta1, theta2, theta3)");
      require(theta[0] > 0.0, "gompertz requires theta1>0");
      require(theta[1] > 0.0 && theta[1] < 1.0, "gompertz requires 0<theta2<1");
      require(theta[2] > 0.0 && theta[2] < 1.0, "gompertz requires 0<theta3<1");
      break;
    case IntensityTag::weibull_srgm:
      require(theta.size() == 3, "weibull_srgm needs (theta1, theta2, theta3)");
      require(theta.minCoeff() > 0.0, "weibull_srgm requires all parameters > 0");
      break;
    case IntensityTag::ispline:
      require(basis.has_value(), "ispline model carries no basis");
      require(theta.size() == basis->n_basis(), "coefficient count != basis count");
      require(theta.minCoeff() >= 0.0, "ispline requires nonnegative coefficients");
      break;
  }
}

double baseline_cif(const IntensityModel& model, double t) {
  model.validate();
  if (t < 0.0) {
    throw ValidationError(ErrorCode::OutOfDomain, "cumulative intensity needs t >= 0");
  }
  if (t == 0.0) return 0.0;
  const Eigen::VectorXd& th = model.theta;
  switch (model.tag) {
    case IntensityTag::power_law:
      return std::pow(t / th[1], th[0]);
    case IntensityTag::musa_okumoto:
      return std::log1p(th[1] * th[0] * t) / th[0];
    case IntensityTag::gompertz: {
      const double u = std::pow(th[1], t);
      return th[0] * (std::pow(th[2], u) - th[2]);
    }
    case IntensityTag::weibull_srgm:
      return th[0] * (-std::expm1(-th[1] * std::pow(t, th[2])));
    case IntensityTag::ispline:
      return model.basis->eval_i(t).dot(th);
  }
  return 0.0;
}

double baseline_bif(const IntensityModel& model, double t) {
  model.validate();
  if (t < 0.0) {
    throw ValidationError(ErrorCode::OutOfDomain, "intensity needs t >= 0");
  }
  const Eigen::VectorXd& th = model.theta;
  switch (model.tag) {
    case IntensityTag::power_law:
      return (th[0] / th[1]) * std::pow(t / th[1], th[0] - 1.0);
    case IntensityTag::musa_okumoto:
      return th[1] / (1.0 + th[1] * th[0] * t);
    case IntensityTag::gompertz: {
      const double u = std::pow(th[1], t);
      const double w = std::pow(th[2], u);
      return th[0] * w * std::log(th[2]) * u * std::log(th[1]);
    }
    case IntensityTag::weibull_srgm: {
      if (t == 0.0) {
        if (th[2] > 1.0) return 0.0;
        if (th[2] == 1.0) return th[0] * th[1];
        return kInf;
      }
      const double v = std::pow(t, th[2]);
      return th[0] * th[1] * th[2] * (v / t) * std::exp(-th[1] * v);
    }
    case IntensityTag::ispline:
      return model.basis->eval_m(t).dot(th);
  }
  return 0.0;
}

Eigen::VectorXd baseline_cif_grad(const IntensityModel& model, double t) {
  model.validate();
  const Eigen::VectorXd& th = model.theta;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(th.size());
  switch (model.tag) {
    case IntensityTag::power_law: {
      if (t <= 0.0) return g;
      const double value = std::pow(t / th[1], th[0]);
      g[0] = value * std::log(t / th[1]);
      g[1] = -th[0] * value / th[1];
      return g;
    }
    case IntensityTag::musa_okumoto: {
      if (t <= 0.0) return g;
      const double u = th[1] * th[0] * t;
      const double cif = std::log1p(u) / th[0];
      g[0] = (-cif + th[1] * t / (1.0 + u)) / th[0];
      g[1] = t / (1.0 + u);
      return g;
    }
    case IntensityTag::gompertz: {
      const double u = std::pow(th[1], t);
      const double w = std::pow(th[2], u);
      g[0] = w - th[2];
      g[1] = (t <= 0.0) ? 0.0 : th[0] * w * std::log(th[2]) * u * t / th[1];
      g[2] = th[0] * (u * w / th[2] - 1.0);
      return g;
    }
    case IntensityTag::weibull_srgm: {
      if (t <= 0.0) return g;
      const double v = std::pow(t, th[2]);
      const double e = std::exp(-th[1] * v);
      g[0] = 1.0 - e;
      g[1] = th[0] * v * e;
      g[2] = th[0] * th[1] * v * std::log(t) * e;
      return g;
    }
    case IntensityTag::ispline:
      return model.basis->eval_i(t);
  }
  return g;
}

Eigen::VectorXd baseline_bif_grad(const IntensityModel& model, double t) {
  model.validate();
  const Eigen::VectorXd& th = model.theta;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(th.size());
  switch (model.tag) {
    case IntensityTag::power_law: {
      const double bif = baseline_bif(model, t);
      g[0] = bif * (1.0 / th[0] + std::log(t / th[1]));
      g[1] = -bif * th[0] / th[1];
      return g;
    }
    case IntensityTag::musa_okumoto: {
      const double denom = 1.0 + th[1] * th[0] * t;
      g[0] = -th[1] * th[1] * t / (denom * denom);
      g[1] = 1.0 / (denom * denom);
      return g;
    }
    case IntensityTag::gompertz: {
      const double u = std::pow(th[1], t);
      const double w = std::pow(th[2], u);
      const double l2 = std::log(th[1]);
      const double l3 = std::log(th[2]);
      const double bif = th[0] * w * l3 * u * l2;
      g[0] = bif / th[0];
      g[1] = th[0] * l3 * w * (u / th[1]) * ((1.0 + t * l2) + l2 * l3 * u * t);
      g[2] = th[0] * l2 * u * w * (1.0 + u * l3) / th[2];
      return g;
    }
    case IntensityTag::weibull_srgm: {
      const double bif = baseline_bif(model, t);
      const double v = std::pow(t, th[2]);
      g[0] = bif / th[0];
      g[1] = (bif / th[1]) * (1.0 - th[1] * v);
      g[2] = (bif / th[2]) * (1.0 + th[2] * std::log(t) * (1.0 - th[1] * v));
      return g;
    }
    case IntensityTag::ispline:
      return model.basis->eval_m(t);
  }
  return g;
}

double baseline_bif_sup(const IntensityModel& model, double lo, double hi) {
  model.validate();
  if (hi < lo) std::swap(lo, hi);
  const Eigen::VectorXd& th = model.theta;
  switch (model.tag) {
    case IntensityTag::power_law:
      if (th[0] == 1.0) return 1.0 / th[1];
      if (th[0] > 1.0) return baseline_bif(model, hi);
      return lo > 0.0 ? baseline_bif(model, lo) : kInf;
    case IntensityTag::musa_okumoto:
      return baseline_bif(model, lo);
    case IntensityTag::gompertz: {
      // lambda0 = C u exp(u log theta3) is unimodal in u = theta2^t.
      const double a = -std::log(th[2]);
      const double u_star = 1.0 / a;
      double best = std::max(baseline_bif(model, lo), baseline_bif(model, hi));
      if (u_star < 1.0) {
        const double t_star = std::log(u_star) / std::log(th[1]);
        if (t_star > lo && t_star < hi) {
          best = std::max(best, baseline_bif(model, t_star));
        }
      }
      return best;
    }
    case IntensityTag::weibull_srgm: {
      if (th[2] < 1.0) return lo > 0.0 ? baseline_bif(model, lo) : kInf;
      if (th[2] == 1.0) return baseline_bif(model, lo);
      const double t_star = std::pow((th[2] - 1.0) / (th[1] * th[2]), 1.0 / th[2]);
      double best = std::max(baseline_bif(model, lo), baseline_bif(model, hi));
      if (t_star > lo && t_star < hi) best = std::max(best, baseline_bif(model, t_star));
      return best;
    }
    case IntensityTag::ispline: {
      // Piecewise quadratic: take the exact max on each break overlap.
      const SplineBasis& basis = *model.basis;
      std::vector<double> cuts{lo};
      for (double knot : basis.interior_knots()) {
        if (knot > lo && knot < hi) cuts.push_back(knot);
      }
      cuts.push_back(hi);
      double best = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        const double mid = 0.5 * (a + b);
        best = std::max(best, quadratic_max(a, b, baseline_bif(model, a),
                                            baseline_bif(model, mid),
                                            baseline_bif(model, b)));
      }
      return best;
    }
  }
  return kInf;
}

double baseline_cif_inverse(const IntensityModel& model, double value, double hi) {
  if (value <= 0.0) return 0.0;
  double lo = 0.0;
  double top = hi;
  if (baseline_cif(model, top) < value) return top;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + top);
    if (baseline_cif(model, mid) < value) {
      lo = mid;
    } else {
      top = mid;
    }
    if (top - lo <= 1e-14 * (1.0 + top)) break;
  }
  return 0.5 * (lo + top);
}

Eigen::VectorXd ispline_basis_eval(const SplineBasis& basis, double t) {
  return basis.eval_i(t);
}

double exposure_rate_at(const std::vector<ExposureStep>& steps, double t) {
  for (const auto& s : steps) {
    if (t > s.start && t <= s.end) return s.rate;
  }
  return 0.0;
}

// Exposure must tile (0, tau] with explicit steps; a gap is an error rather
// than an imputed zero, since silent zeros would bias every Lambda_i.
void require_exposure_coverage(const std::vector<ExposureStep>& steps, double tau,
                               const std::string& unit) {
  const double slack = 1e-9 * (1.0 + tau);
  double covered_to = 0.0;
  for (const auto& s : steps) {
    if (s.start > covered_to + slack) break;
    covered_to = std::max(covered_to, s.end);
    if (covered_to >= tau - slack) return;
  }
  throw ValidationError(ErrorCode::InvariantViolation,
                        "unit " + unit + " exposure does not cover (0, " +
                            format_double(tau) + "]; add explicit zero-rate steps");
}

double unit_cif(const IntensityModel& model, const std::vector<ExposureStep>& steps,
                double t) {
  double total = 0.0;
  for (const auto& s : steps) {
    const double hi = std::min(s.end, t);
    if (hi <= s.start || s.rate <= 0.0) continue;
    total += s.rate * (baseline_cif(model, hi) - baseline_cif(model, s.start));
  }
  return total;
}

double nhpp_loglik(const std::vector<RecurrentHistory>& histories,
                   const std::vector<ExposureStep>& exposure,
                   const IntensityModel& model) {
  model.validate();
  if (histories.empty()) {
    throw ValidationError(ErrorCode::EmptyDataset, "no recurrent histories");
  }
  const auto by_unit = exposure_by_unit(exposure);
  double ll = 0.0;
  for (const auto& h : histories) {
    const auto it = by_unit.find(h.unit_id);
    const std::vector<ExposureStep> no_steps;
    const std::vector<ExposureStep>& steps = it == by_unit.end() ? no_steps : it->second;
    require_exposure_coverage(steps, h.follow_up_end, h.unit_id);
    for (double t : h.event_times) {
      const double rate = exposure_rate_at(steps, t);
      if (rate <= 0.0) {
        throw ValidationError(ErrorCode::EventOutsideExposure,
                              "unit " + h.unit_id + " event at " + format_double(t) +
                                  " has no positive exposure");
      }
      ll += std::log(baseline_bif(model, t) * rate);
    }
    for (const auto& s : steps) {
      const double hi = std::min(s.end, h.follow_up_end);
      if (hi <= s.start || s.rate <= 0.0) continue;
      ll -= s.rate * (baseline_cif(model, hi) - baseline_cif(model, s.start));
    }
  }
  return ll;
}

Eigen::VectorXd nhpp_loglik_grad(const std::vector<RecurrentHistory>& histories,
                                 const std::vector<ExposureStep>& exposure,
                                 const IntensityModel& model) {
  model.validate();
  const auto by_unit = exposure_by_unit(exposure);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(model.theta.size());
  for (const auto& h : histories) {
    const auto it = by_unit.find(h.unit_id);
    const std::vector<ExposureStep> no_steps;
    require_exposure_coverage(it == by_unit.end() ? no_steps : it->second,
                              h.follow_up_end, h.unit_id);
    if (it == by_unit.end()) continue;
    for (double t : h.event_times) {
      g += baseline_bif_grad(model, t) / baseline_bif(model, t);
    }
    for (const auto& s : it->second) {
      const double hi = std::min(s.end, h.follow_up_end);
      if (hi <= s.start || s.rate <= 0.0) continue;
      g -= s.rate * (baseline_cif_grad(model, hi) - baseline_cif_grad(model, s.start));
    }
  }
  return g;
}

namespace {

// Smooth reparametrizations onto unconstrained coordinates for the parametric
// tags; the spline fit stays in natural coordinates with a projection box.
// power_law uses (log beta, log c) with Lambda0 = c t^beta, which decorrelates
// the shape and scale directions.
Eigen::VectorXd to_natural(IntensityTag tag, const Eigen::VectorXd& x) {
  Eigen::VectorXd th = x;
  switch (tag) {
    case IntensityTag::power_law: {
      const double beta = std::exp(x[0]);
      th[0] = beta;
      th[1] = std::exp(-x[1] / beta);  // eta = c^(-1/beta)
      break;
    }
    case IntensityTag::musa_okumoto:
      th = x.array().exp();
      break;
    case IntensityTag::gompertz:
      th[0] = std::exp(x[0]);
      th[1] = logistic(x[1]);
      th[2] = logistic(x[2]);
      break;
    case IntensityTag::weibull_srgm:
      th = x.array().exp();
      break;
    case IntensityTag::ispline:
      break;
  }
  return th;
}

// d(natural theta) / d(internal x), used both to chain gradients and for the
// delta-method covariance.
Eigen::MatrixXd natural_jacobian(IntensityTag tag, const Eigen::VectorXd& th,
                                 const Eigen::VectorXd& x) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(th.size(), th.size());
  switch (tag) {
    case IntensityTag::power_law:
      jac(0, 0) = th[0];
      jac(1, 0) = th[1] * x[1] / th[0];
      jac(1, 1) = -th[1] / th[0];
      break;
    case IntensityTag::musa_okumoto:
    case IntensityTag::weibull_srgm:
      jac.diagonal() = th;
      break;
    case IntensityTag::gompertz:
      jac(0, 0) = th[0];
      jac(1, 1) = th[1] * (1.0 - th[1]);
      jac(2, 2) = th[2] * (1.0 - th[2]);
      break;
    case IntensityTag::ispline:
      break;
  }
  return jac;
}

Eigen::VectorXd from_natural(IntensityTag tag, const Eigen::VectorXd& th) {
  Eigen::VectorXd x = th;
  switch (tag) {
    case IntensityTag::power_law:
      x[0] = std::log(th[0]);
      x[1] = -th[0] * std::log(th[1]);  // log c
      break;
    case IntensityTag::musa_okumoto:
    case IntensityTag::weibull_srgm:
      x = th.array().log();
      break;
    case IntensityTag::gompertz:
      x[0] = std::log(th[0]);
      x[1] = std::log(th[1] / (1.0 - th[1]));
      x[2] = std::log(th[2] / (1.0 - th[2]));
      break;
    case IntensityTag::ispline:
      break;
  }
  return x;
}

struct DataSummary {
  int n_events = 0;
  double total_exposure = 0.0;  // integral of x over all follow-ups
  double max_follow_up = 0.0;
  std::vector<double> pooled_events;
};

DataSummary summarize(const std::vector<RecurrentHistory>& histories,
                      const std::vector<ExposureStep>& exposure) {
  DataSummary s;
  const auto by_unit = exposure_by_unit(exposure);
  for (const auto& h : histories) {
    s.n_events += static_cast<int>(h.event_times.size());
    s.max_follow_up = std::max(s.max_follow_up, h.follow_up_end);
    s.pooled_events.insert(s.pooled_events.end(), h.event_times.begin(),
                           h.event_times.end());
    const auto it = by_unit.find(h.unit_id);
    if (it == by_unit.end()) continue;
    for (const auto& step : it->second) {
      const double hi = std::min(step.end, h.follow_up_end);
      if (hi > step.start) s.total_exposure += step.rate * (hi - step.start);
    }
  }
  return s;
}

Eigen::VectorXd starting_theta(IntensityTag tag, const DataSummary& s,
                               const SplineBasis* basis) {
  const double tau = std::max(s.max_follow_up, 1.0);
  // Scale candidates so the implied expected count matches the observed one.
  const double events_per_exposure =
      s.total_exposure > 0.0 ? s.n_events / s.total_exposure : 1.0;
  switch (tag) {
    case IntensityTag::power_law:
      // beta = 1 start: Lambda0(t) = t / eta.
      return Eigen::Vector2d(1.0, events_per_exposure > 0.0
                                      ? 1.0 / events_per_exposure
                                      : tau);
    case IntensityTag::musa_okumoto:
      return Eigen::Vector2d(1.0 / tau, std::max(events_per_exposure, 1e-8));
    case IntensityTag::gompertz: {
      const double theta2 = std::exp(-3.0 / tau);
      const double theta3 = 0.5;
      const double shape =
          std::pow(theta3, std::pow(theta2, tau)) - theta3;  // Lambda0(tau)/theta1
      const double target = events_per_exposure * tau;       // want Lambda0(tau) ~ target
      return Eigen::Vector3d(std::max(target / std::max(shape, 1e-6), 1e-6), theta2,
                             theta3);
    }
    case IntensityTag::weibull_srgm: {
      const double theta2 = 1.0 / tau;
      const double target = events_per_exposure * tau;
      return Eigen::Vector3d(std::max(target / 0.632, 1e-6), theta2, 1.0);
    }
    case IntensityTag::ispline: {
      const double target = events_per_exposure * tau;
      return Eigen::VectorXd::Constant(basis->n_basis(),
                                       std::max(target, 1e-6) / basis->n_basis());
    }
  }
  return Eigen::VectorXd();
}

}  // namespace

NhppFit fit_nhpp(const std::vector<RecurrentHistory>& histories,
                 const std::vector<ExposureStep>& exposure, IntensityTag tag,
                 const FitNhppOptions& opts) {
  const DataSummary summary = summarize(histories, exposure);

  IntensityModel model;
  model.tag = tag;
  if (tag == IntensityTag::ispline) {
    if (opts.interior_knots) {
      model.basis = SplineBasis::make(summary.max_follow_up, *opts.interior_knots);
    } else {
      model.basis = SplineBasis::from_event_quantiles(
          summary.max_follow_up, summary.pooled_events, opts.n_spline_basis);
    }
  }
  model.theta = starting_theta(tag, summary, model.basis ? &*model.basis : nullptr);
  if (summary.n_events < model.n_params()) {
    throw ValidationError(ErrorCode::TooFewEvents,
                          "fewer events than parameters (" +
                              std::to_string(summary.n_events) + " < " +
                              std::to_string(model.n_params()) + ")");
  }

  const bool spline = tag == IntensityTag::ispline;
  auto to_model = [&](const Eigen::VectorXd& x) {
    IntensityModel m = model;
    m.theta = to_natural(tag, x);
    return m;
  };
  Objective objective = [&](const Eigen::VectorXd& x) {
    const IntensityModel m = to_model(x);
    try {
      return nhpp_loglik(histories, exposure, m);
    } catch (const ValidationError& err) {
      // Only parameter-dependent failures become -inf for the line search;
      // data problems propagate.
      if (err.code() == ErrorCode::ConstraintViolation ||
          err.code() == ErrorCode::OutOfDomain) {
        return -kInf;
      }
      throw;
    }
  };
  Gradient gradient = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const IntensityModel m = to_model(x);
    const Eigen::VectorXd g_nat = nhpp_loglik_grad(histories, exposure, m);
    return natural_jacobian(tag, m.theta, x).transpose() * g_nat;
  };

  const Eigen::VectorXd start = from_natural(tag, model.theta);
  const BoxConstraints box = spline ? BoxConstraints::nonnegative(start.size())
                                    : BoxConstraints::unbounded(start.size());
  const MaximizeResult opt = maximize(objective, start, box, opts.optimize, gradient);

  NhppFit fit;
  fit.model = to_model(opt.argmax);
  FitResult& result = fit.result;
  result.model_tag = tag_name(tag);
  result.theta_hat = fit.model.theta;
  result.loglik = opt.value;
  result.converged = opt.converged;
  result.n_iter = opt.n_iter;
  if (spline) {
    for (int l = 0; l < fit.model.n_params(); ++l) {
      if (fit.model.theta[l] <= 0.0) result.boundary_params.push_back(l);
    }
  }

  Eigen::MatrixXd cov_internal;
  if (covariance_from_loglik(objective, opt.argmax, result.boundary_params,
                             &cov_internal)) {
    const Eigen::MatrixXd jac = natural_jacobian(tag, fit.model.theta, opt.argmax);
    const Eigen::MatrixXd cov = jac * cov_internal * jac.transpose();
    result.covariance = cov;
    result.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

std::vector<CurvePoint> expected_vs_observed(const NhppFit& fit,
                                             const std::vector<RecurrentHistory>& histories,
                                             const std::vector<ExposureStep>& exposure,
                                             const std::vector<double>& t_grid) {
  if (!fit.result.converged) {
    throw ValidationError(ErrorCode::NonConvergence,
                          "expected_vs_observed requires a converged fit");
  }
  const auto by_unit = exposure_by_unit(exposure);
  std::vector<double> all_events;
  for (const auto& h : histories) {
    all_events.insert(all_events.end(), h.event_times.begin(), h.event_times.end());
  }
  std::sort(all_events.begin(), all_events.end());

  std::vector<CurvePoint> curve;
  curve.reserve(t_grid.size());
  for (double t : t_grid) {
    CurvePoint point;
    point.t = t;
    for (const auto& h : histories) {
      const auto it = by_unit.find(h.unit_id);
      if (it == by_unit.end()) continue;
      point.expected += unit_cif(fit.model, it->second, std::min(t, h.follow_up_end));
    }
    point.observed = static_cast<double>(
        std::upper_bound(all_events.begin(), all_events.end(), t) - all_events.begin());
    curve.push_back(point);
  }
  return curve;
}

namespace {

// Evaluates the banded curve for one (possibly refitted) model.
using BandCurve = std::function<std::vector<double>(const IntensityModel&)>;

PointwiseBands bootstrap_band_engine(const NhppFit& fit,
                                     const std::vector<RecurrentHistory>& histories,
                                     const std::vector<ExposureStep>& exposure,
                                     const std::vector<double>& t_grid, int B,
                                     double level, std::uint64_t seed,
                                     const BandCurve& curve_of) {
  if (B < 200) {
    throw ValidationError(ErrorCode::InvalidConfig, "bootstrap needs B >= 200");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError(ErrorCode::ProbabilityOutOfRange, "level must be in (0,1)");
  }
  const auto by_unit = exposure_by_unit(exposure);

  FitNhppOptions refit_opts;
  if (fit.model.tag == IntensityTag::ispline) {
    // Bootstrap refits reuse the knots selected on the original data.
    refit_opts.interior_knots = fit.model.basis->interior_knots();
    refit_opts.n_spline_basis = fit.model.basis->n_basis();
  }

  SplitRng root(seed);
  std::vector<std::vector<double>> curves;  // per replicate, Lambda0 on grid
  curves.reserve(B);
  int failures = 0;
  for (int b = 0; b < B; ++b) {
    SplitRng rep_rng = root.split(static_cast<std::uint64_t>(b));
    std::vector<RecurrentHistory> rep_histories;
    rep_histories.reserve(histories.size());
    for (std::size_t u = 0; u < histories.size(); ++u) {
      const auto it = by_unit.find(histories[u].unit_id);
      const std::vector<ExposureStep> none;
      SplitRng unit_rng = rep_rng.split(static_cast<std::uint64_t>(u));
      RecurrentHistory sim = simgen::simulate_nhpp_with_rng(
          fit.model, it == by_unit.end() ? none : it->second,
          histories[u].follow_up_end, &unit_rng);
      sim.unit_id = histories[u].unit_id;
      rep_histories.push_back(std::move(sim));
    }
    try {
      const NhppFit refit = fit_nhpp(rep_histories, exposure, fit.model.tag, refit_opts);
      if (!refit.result.converged) {
        ++failures;
        continue;
      }
      curves.push_back(curve_of(refit.model));
    } catch (const Error&) {
      ++failures;
    }
  }
  if (failures > 0.05 * B) {
    throw ConvergenceError(ErrorCode::RefitFailureRateExceeded,
                           std::to_string(failures) + " of " + std::to_string(B) +
                               " bootstrap refits failed");
  }

  PointwiseBands bands;
  bands.t = t_grid;
  bands.n_refit_failures = failures;
  bands.n_replicates = static_cast<int>(curves.size());
  const std::vector<double> estimate_curve = curve_of(fit.model);
  const double alpha = 1.0 - level;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    std::vector<double> values;
    values.reserve(curves.size());
    for (const auto& curve : curves) values.push_back(curve[k]);
    std::sort(values.begin(), values.end());
    const auto quantile_at = [&](double p) {
      const double pos = p * (static_cast<double>(values.size()) - 1.0);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, values.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      return (1.0 - frac) * values[lo] + frac * values[hi];
    };
    // The envelope always contains the point estimate curve.
    bands.lower.push_back(std::min(quantile_at(alpha / 2.0), estimate_curve[k]));
    bands.upper.push_back(std::max(quantile_at(1.0 - alpha / 2.0), estimate_curve[k]));
  }
  return bands;
}

}  // namespace

PointwiseBands bootstrap_pointwise_bands(const NhppFit& fit,
                                         const std::vector<RecurrentHistory>& histories,
                                         const std::vector<ExposureStep>& exposure,
                                         const std::vector<double>& t_grid, int B,
                                         double level, std::uint64_t seed) {
  return bootstrap_band_engine(fit, histories, exposure, t_grid, B, level, seed,
                               [&](const IntensityModel& model) {
                                 std::vector<double> curve;
                                 curve.reserve(t_grid.size());
                                 for (double t : t_grid) {
                                   curve.push_back(baseline_cif(model, t));
                                 }
                                 return curve;
                               });
}

PointwiseBands bootstrap_expected_bands(const NhppFit& fit,
                                        const std::vector<RecurrentHistory>& histories,
                                        const std::vector<ExposureStep>& exposure,
                                        const std::vector<double>& t_grid, int B,
                                        double level, std::uint64_t seed) {
  const auto by_unit = exposure_by_unit(exposure);
  return bootstrap_band_engine(
      fit, histories, exposure, t_grid, B, level, seed,
      [&](const IntensityModel& model) {
        std::vector<double> curve;
        curve.reserve(t_grid.size());
        for (double t : t_grid) {
          double expected = 0.0;
          for (const auto& h : histories) {
            const auto it = by_unit.find(h.unit_id);
            if (it == by_unit.end()) continue;
            expected += unit_cif(model, it->second, std::min(t, h.follow_up_end));
          }
          curve.push_back(expected);
        }
        return curve;
      });
}

}  // namespace smartrel::nhpp
