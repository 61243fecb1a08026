#include "smartrel/quadrature.hpp"

#include <cmath>

#include "smartrel/common.hpp"
#include "smartrel/special.hpp"

namespace smartrel {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric Jacobi matrix, weights
// are mu0 times the squared first components of the normalized eigenvectors.
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diag, double mu0) {
  const int n = static_cast<int>(off_diag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = off_diag[i];
    jacobi(i + 1, i) = off_diag[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite_nodes(int order) {
  if (order < 1 || order > 100) {
    throw ValidationError(ErrorCode::OrderOutOfRange,
                          "Gauss-Hermite order must be in [1, 100]");
  }
  if (order == 1) {
    QuadratureRule rule;
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Constant(1, kSqrtPi);
    return rule;
  }
  Eigen::VectorXd off(order - 1);
  for (int i = 1; i < order; ++i) off[i - 1] = std::sqrt(i / 2.0);
  QuadratureRule rule = golub_welsch(off, kSqrtPi);
  // Enforce the exact +/- symmetry the eigensolver delivers only to roundoff.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    rule.nodes[i] = -node;
    rule.nodes[j] = node;
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_legendre_nodes(int order) {
  if (order < 1 || order > 100) {
    throw ValidationError(ErrorCode::OrderOutOfRange,
                          "Gauss-Legendre order must be in [1, 100]");
  }
  Eigen::VectorXd off(order - 1);
  for (int i = 1; i < order; ++i) {
    off[i - 1] = i / std::sqrt(4.0 * i * i - 1.0);
  }
  return golub_welsch(off, 2.0);
}

}  // namespace smartrel
