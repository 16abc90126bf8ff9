#pragma once

#include <Eigen/Core>

namespace hocurve {

/// Quadrature rule on the reference simplex of dimension 1, 2 or 3
/// ({x_i >= 0, sum x_i <= 1}). Points are stored column-wise.
struct QuadratureRule {
  int dim = 0;
  int order = 0;  ///< total polynomial degree integrated exactly
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
};

/// Gauss-Jacobi nodes and weights on [0, 1] for the weight (1 - x)^alpha.
void gauss_jacobi(int n, int alpha, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights);

/// Collapsed (conical product) rule exact for total degree `order`. All
/// weights are positive and sum to the simplex measure 1/dim!.
QuadratureRule simplex_rule(int dim, int order);

/// Cached rule for (dim, order). The returned reference is stable for the
/// lifetime of the program.
const QuadratureRule& cached_simplex_rule(int dim, int order);

}  // namespace hocurve
