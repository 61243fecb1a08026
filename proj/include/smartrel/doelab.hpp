#ifndef SMARTREL_DOELAB_HPP
#define SMARTREL_DOELAB_HPP

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smartrel::doelab {

struct MixtureRun {
  Eigen::Vector3d x;  // mixture proportions, sum to 1
  double z1 = 0.0;    // processing variables in {0,1}
  double z2 = 0.0;
  int run = 0;        // design run number, 1-based
  int replicate = 1;
};

struct MixtureDesign {
  std::vector<MixtureRun> runs;
  double min_prop = 0.01;
};

// The 28-run mixture-process cross design: seven base mixture rows
// ((0.01,0.01,0.98) permutations, (0.01,0.495,0.495) permutations, centroid)
// at (z1,z2) = (1,1), crossed with `crossed_z_levels` for runs 8-28, each run
// replicated `replicates` times. Only m = 3, h = 2 is supported.
MixtureDesign gen_mixture_design(
    int m = 3, int h = 2, double min_prop = 0.01, int replicates = 2,
    const std::vector<std::array<double, 2>>& crossed_z_levels = {{1.0, 0.0},
                                                                  {0.0, 1.0},
                                                                  {1.0, 1.0}});

// Blend surrogate with process-by-mixture interactions and no process main
// effects; gamma_main is recovered afterwards from the sum-to-zero identity
// sum_j (gamma_kj + gamma_k) = 0.
struct SurrogateFit {
  Eigen::Vector3d beta;        // linear blend coefficients
  Eigen::Vector3d beta_pair;   // x1x2, x1x3, x2x3
  Eigen::MatrixXd gamma;       // 2 x 3 process-by-mixture coefficients
  double delta12 = 0.0;        // z1 z2 interaction
  Eigen::Vector2d gamma_main;  // recovered process main effects
  double sigma_eps2 = 0.0;     // residual variance (replicates pooled)

  double predict(const Eigen::Vector3d& x, double z1, double z2) const;
};

// Least squares on the 13-column model matrix. Throws RankDeficient (naming
// the aliased columns) when the design cannot identify every term.
SurrogateFit fit_surrogate(const MixtureDesign& design, const std::vector<double>& responses);

struct GridPoint {
  Eigen::Vector3d x;
  double yhat = 0.0;
};

// Barycentric lattice with resolution steps per edge, restricted to
// x_j >= min_prop, evaluated at fixed processing levels.
std::vector<GridPoint> predict_simplex_grid(const SurrogateFit& fit, double z1, double z2,
                                            int resolution, double min_prop = 0.01);

}  // namespace smartrel::doelab

#endif  // SMARTREL_DOELAB_HPP
