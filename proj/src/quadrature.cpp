#include "hocurve/quadrature.hpp"

#include "hocurve/error.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace hocurve {

void gauss_jacobi(int n, int alpha, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights) {
  // Golub-Welsch on the Jacobi matrix of P^(alpha, 0) over [-1, 1].
  const double a = alpha;
  const double b = 0.0;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    T(k, k) = (s == 0.0) ? (b - a) / (a + b + 2.0)
                         : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double k1 = k + 1.0;
      const double s1 = 2.0 * k1 + a + b;
      const double num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
      const double den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
      T(k, k + 1) = T(k + 1, k) = std::sqrt(num / den);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  // mu0 = int_{-1}^{1} (1-x)^a dx = 2^(a+1)/(a+1)
  const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  nodes.resize(n);
  weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double x = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    nodes(k) = 0.5 * (x + 1.0);
    // (1-x)^a dx on [-1,1] -> 2^(a+1) (1-u)^a du on [0,1]
    weights(k) = mu0 * v * v / std::pow(2.0, a + 1.0);
  }
}

QuadratureRule simplex_rule(int dim, int order) {
  if (dim < 1 || dim > 3 || order < 0)
    throw Error(ErrorCategory::Parameter, "simplex_rule: unsupported dim/order");
  const int m = order / 2 + 1;  // 2m - 1 >= order
  std::array<Eigen::VectorXd, 3> x, w;
  // Collapsed coordinates: the first direction carries (1-u)^(dim-1).
  for (int d = 0; d < dim; ++d) gauss_jacobi(m, dim - 1 - d, x[d], w[d]);

  QuadratureRule rule;
  rule.dim = dim;
  rule.order = order;
  Eigen::Index n = 1;
  for (int d = 0; d < dim; ++d) n *= m;
  rule.points.resize(dim, n);
  rule.weights.resize(n);
  Eigen::Index q = 0;
  if (dim == 1) {
    rule.points.row(0) = x[0].transpose();
    rule.weights = w[0];
    return rule;
  }
  if (dim == 2) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j, ++q) {
        const double u = x[0](i), v = x[1](j);
        rule.points(0, q) = u;
        rule.points(1, q) = (1.0 - u) * v;
        rule.weights(q) = w[0](i) * w[1](j);
      }
    return rule;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k, ++q) {
        const double u = x[0](i), v = x[1](j), t = x[2](k);
        rule.points(0, q) = u;
        rule.points(1, q) = (1.0 - u) * v;
        rule.points(2, q) = (1.0 - u) * (1.0 - v) * t;
        rule.weights(q) = w[0](i) * w[1](j) * w[2](k);
      }
  return rule;
}

const QuadratureRule& cached_simplex_rule(int dim, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_unique<QuadratureRule>(simplex_rule(dim, order));
  return *slot;
}

}  // namespace hocurve
