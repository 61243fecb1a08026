#include "smartrel/rng.hpp"

#include <cmath>

#include "smartrel/special.hpp"

namespace smartrel {

double SplitRng::next_normal() { return norm_quantile(next_uniform()); }

double SplitRng::next_exponential() { return -std::log(next_uniform()); }

Eigen::VectorXd SplitRng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = next_normal();
  return v;
}

}  // namespace smartrel
