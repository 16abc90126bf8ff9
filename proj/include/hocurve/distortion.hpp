#pragma once

#include "hocurve/mesh.hpp"
#include "hocurve/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>

namespace hocurve {

/// det_0(d) = (d + |d|) / 2.
template <class Scalar>
Scalar regularized_det(Scalar d) {
  using std::abs;
  return (d + abs(d)) / Scalar(2);
}

/// Shape distortion eta(J) = |J|_F^2 / (n det_0(J)^(2/n)); +infinity when
/// det(J) <= 0.
template <class Derived>
typename Derived::Scalar pointwise_distortion(const Eigen::MatrixBase<Derived>& J) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  const auto n = J.rows();
  const Scalar d0 = regularized_det(J.determinant());
  if (!(d0 > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return J.squaredNorm() / (Scalar(n) * pow(d0, Scalar(2) / Scalar(n)));
}

/// Squared distortion f = eta^2 at one point together with what its first
/// and second derivatives with respect to J need. With
/// G = 4 J / |J|^2 - (4/n) J^{-T}, the gradient is f G and the Hessian is
/// f (G (x) G + 4/|J|^2 I - 8/|J|^4 J (x) J + (4/n) J^{-1}_{jk} J^{-1}_{li}).
template <class Scalar, int N>
struct DistortionPoint {
  using Mat = Eigen::Matrix<Scalar, N, N>;
  bool valid = false;
  Scalar f = std::numeric_limits<Scalar>::infinity();
  Scalar norm2 = 0;
  Mat J, Jinv, G;

  explicit DistortionPoint(const Mat& jac) : J(jac) {
    using std::pow;
    const Scalar det = J.determinant();
    if (!(det > Scalar(0))) return;
    valid = true;
    norm2 = J.squaredNorm();
    Jinv = J.inverse();
    f = norm2 * norm2 / (Scalar(N * N) * pow(det, Scalar(4) / Scalar(N)));
    G = (Scalar(4) / norm2) * J - (Scalar(4) / Scalar(N)) * Jinv.transpose();
  }

  /// df/dJ.
  Mat gradient() const { return f * G; }

  /// Second derivative applied to a direction: sum_kl C_{ij,kl} V_kl.
  Mat hessian_action(const Mat& V) const {
    const Scalar gv = (G.array() * V.array()).sum();
    const Scalar jv = (J.array() * V.array()).sum();
    return f * (gv * G + (Scalar(4) / norm2) * V - (Scalar(8) / (norm2 * norm2)) * jv * J +
                (Scalar(4) / Scalar(N)) * (Jinv * V * Jinv).transpose());
  }

  /// Block D_{jm} = C_{kj,lm} of the second derivative for rows of
  /// component k and columns of component l.
  Mat hessian_block(int k, int l) const {
    Mat D;
    for (int j = 0; j < N; ++j)
      for (int m = 0; m < N; ++m) {
        Scalar c = G(k, j) * G(l, m) - Scalar(8) / (norm2 * norm2) * J(k, j) * J(l, m) +
                   (Scalar(4) / Scalar(N)) * Jinv(j, l) * Jinv(m, k);
        if (k == l && j == m) c += Scalar(4) / norm2;
        D(j, m) = f * c;
      }
    return D;
  }
};

/// Precomputed reference data for element kernels of a given (dim, degree):
/// the degree-2p rule and the stacked reference shape gradients.
class ElementTables {
 public:
  ElementTables(int dim, int degree);

  const QuadratureRule& rule() const { return *rule_; }
  /// Reference gradients at all points, nodes x (dim * num_points); block q
  /// holds the gradients at point q.
  const Eigen::MatrixXd& stacked_gradients() const { return grads_; }
  /// Shape values, nodes x num_points.
  const Eigen::MatrixXd& shape_values() const { return values_; }

  static std::shared_ptr<const ElementTables> get(int dim, int degree);

 private:
  const QuadratureRule* rule_;
  Eigen::MatrixXd grads_;
  Eigen::MatrixXd values_;
};

enum class HessianBlocks { Full, Diagonal };

/// Elemental contribution sum_q w_q eta(J_q)^2 |det J_lin| and its exact
/// derivatives with respect to the element's nodal coordinates. Local
/// unknowns are component-major: index k * nodes + a.
struct ElementKernelResult {
  double energy = 0.0;
  Eigen::MatrixXd gradient;  ///< nodes x dim
  Eigen::MatrixXd hessian;   ///< (dim * nodes)^2, symmetric
};

/// order 0: energy only (+infinity for an invalid element). Orders 1 and 2
/// throw an invalid-configuration error when the element is not valid at all
/// quadrature points.
ElementKernelResult element_kernel(const HighOrderMesh& mesh, Index elem, int order,
                                   HessianBlocks blocks = HessianBlocks::Full);

/// Energy only; +infinity when any quadrature point has det J <= 0.
double element_energy(const HighOrderMesh& mesh, Index elem);

/// q = 1 / eta_E with eta_E the L2 average of eta over the reference element.
double element_quality(const HighOrderMesh& mesh, Index elem);

/// Smallest det J over all quadrature points of the element.
double element_min_jacobian(const HighOrderMesh& mesh, Index elem);

/// Minimum, mean and maximum element quality and the smallest Jacobian
/// determinant over all quadrature points.
struct QualityReport {
  double min_quality = 0.0;
  double mean_quality = 0.0;
  double max_quality = 0.0;
  double min_jacobian = 0.0;
  Index invalid_elements = 0;
  Eigen::VectorXd quality;
};

QualityReport quality_report(const HighOrderMesh& mesh);

}  // namespace hocurve
