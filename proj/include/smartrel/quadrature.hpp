#ifndef SMARTREL_QUADRATURE_HPP
#define SMARTREL_QUADRATURE_HPP

#include <utility>

#include <Eigen/Dense>

namespace smartrel {

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss-Hermite rule for weight exp(-x^2) on (-inf, inf).
// Weights sum to sqrt(pi); nodes are symmetric about 0. order in [1, 100].
QuadratureRule gauss_hermite_nodes(int order);

// Gauss-Legendre rule on [-1, 1]; weights sum to 2. Exact for polynomials
// of degree up to 2*order - 1.
QuadratureRule gauss_legendre_nodes(int order);

}  // namespace smartrel

#endif  // SMARTREL_QUADRATURE_HPP
