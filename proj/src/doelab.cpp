#include "smartrel/doelab.hpp"

#include <cmath>

#include "smartrel/common.hpp"

namespace smartrel::doelab {

namespace {

const char* kColumnNames[13] = {"x1",    "x2",    "x3",    "x1x2", "x1x3",
                                "x2x3",  "z1x1",  "z1x2",  "z1x3", "z2x1",
                                "z2x2",  "z2x3",  "z1z2"};

Eigen::RowVectorXd model_row(const Eigen::Vector3d& x, double z1, double z2) {
  Eigen::RowVectorXd row(13);
  row << x[0], x[1], x[2],
      x[0] * x[1], x[0] * x[2], x[1] * x[2],
      z1 * x[0], z1 * x[1], z1 * x[2],
      z2 * x[0], z2 * x[1], z2 * x[2],
      z1 * z2;
  return row;
}

}  // namespace

MixtureDesign gen_mixture_design(int m, int h, double min_prop, int replicates,
                                 const std::vector<std::array<double, 2>>& crossed_z_levels) {
  if (m != 3 || h != 2) {
    throw ValidationError(ErrorCode::UnsupportedDimension,
                          "only m=3 mixture components with h=2 processing variables");
  }
  if (replicates < 1) {
    throw ValidationError(ErrorCode::InvalidConfig, "replicates must be >= 1");
  }
  const double lo = 0.01;
  const double mid = 0.495;
  const double hi = 0.98;
  const double third = 1.0 / 3.0;
  const std::vector<Eigen::Vector3d> base = {
      {lo, lo, hi}, {lo, hi, lo}, {hi, lo, lo},
      {lo, mid, mid}, {mid, lo, mid}, {mid, mid, lo},
      {third, third, third}};

  MixtureDesign design;
  design.min_prop = min_prop;
  int run = 0;
  auto push = [&](const Eigen::Vector3d& x, double z1, double z2) {
    ++run;
    for (int rep = 1; rep <= replicates; ++rep) {
      MixtureRun row;
      row.x = x;
      row.z1 = z1;
      row.z2 = z2;
      row.run = run;
      row.replicate = rep;
      design.runs.push_back(row);
    }
  };
  for (const auto& x : base) push(x, 1.0, 1.0);
  for (const auto& level : crossed_z_levels) {
    for (const auto& x : base) push(x, level[0], level[1]);
  }

  for (const auto& row : design.runs) {
    if (std::abs(row.x.sum() - 1.0) > 1e-12) {
      throw ValidationError(ErrorCode::InvariantViolation, "proportions do not sum to 1");
    }
    if (row.x.minCoeff() < min_prop - 1e-12) {
      throw ValidationError(ErrorCode::InvariantViolation,
                            "proportion below minimum " + std::to_string(min_prop));
    }
  }
  return design;
}

double SurrogateFit::predict(const Eigen::Vector3d& x, double z1, double z2) const {
  Eigen::VectorXd coef(13);
  coef << beta[0], beta[1], beta[2], beta_pair[0], beta_pair[1], beta_pair[2],
      gamma(0, 0), gamma(0, 1), gamma(0, 2), gamma(1, 0), gamma(1, 1), gamma(1, 2),
      delta12;
  return model_row(x, z1, z2).dot(coef);
}

SurrogateFit fit_surrogate(const MixtureDesign& design, const std::vector<double>& responses) {
  const auto n = static_cast<Eigen::Index>(design.runs.size());
  if (n == 0) {
    throw ValidationError(ErrorCode::EmptyDataset, "empty design");
  }
  if (responses.size() != design.runs.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "response count does not match design rows");
  }
  Eigen::MatrixXd x(n, 13);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = model_row(design.runs[i].x, design.runs[i].z1, design.runs[i].z2);
    y[i] = responses[i];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-8);
  if (qr.rank() < 13) {
    // Columns past the rank in pivot order are the aliased ones.
    std::string aliased;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < 13; ++j) {
      if (!aliased.empty()) aliased += ", ";
      aliased += kColumnNames[perm[j]];
    }
    throw ValidationError(ErrorCode::RankDeficient,
                          "design cannot identify: " + aliased);
  }
  const Eigen::VectorXd coef = qr.solve(y);

  SurrogateFit fit;
  fit.beta = coef.segment<3>(0);
  fit.beta_pair = coef.segment<3>(3);
  fit.gamma.resize(2, 3);
  fit.gamma.row(0) = coef.segment<3>(6).transpose();
  fit.gamma.row(1) = coef.segment<3>(9).transpose();
  fit.delta12 = coef[12];
  // sum_j (gamma_kj + gamma_k) = 0 identifies the process main effects.
  fit.gamma_main[0] = -fit.gamma.row(0).mean();
  fit.gamma_main[1] = -fit.gamma.row(1).mean();

  const double rss = (y - x * coef).squaredNorm();
  fit.sigma_eps2 = n > 13 ? rss / static_cast<double>(n - 13) : 0.0;
  return fit;
}

std::vector<GridPoint> predict_simplex_grid(const SurrogateFit& fit, double z1, double z2,
                                            int resolution, double min_prop) {
  if (resolution < 10) {
    throw ValidationError(ErrorCode::InvalidConfig, "resolution must be at least 10");
  }
  std::vector<GridPoint> grid;
  for (int i = 0; i <= resolution; ++i) {
    for (int j = 0; i + j <= resolution; ++j) {
      const int k = resolution - i - j;
      Eigen::Vector3d x(static_cast<double>(i) / resolution,
                        static_cast<double>(j) / resolution,
                        static_cast<double>(k) / resolution);
      if (x.minCoeff() < min_prop - 1e-12) continue;
      GridPoint point;
      point.x = x;
      point.yhat = fit.predict(x, z1, z2);
      grid.push_back(point);
    }
  }
  return grid;
}

}  // namespace smartrel::doelab
