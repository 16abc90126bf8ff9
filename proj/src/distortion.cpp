#include "hocurve/distortion.hpp"

#include "hocurve/error.hpp"
#include "hocurve/parallel.hpp"

#include <map>
#include <mutex>
#include <string>

namespace hocurve {

ElementTables::ElementTables(int dim, int degree)
    : rule_(&cached_simplex_rule(dim, 2 * degree)) {
  const auto ref = ReferenceElement::get(dim, degree);
  const Index nq = rule_->size();
  grads_.resize(ref->num_nodes(), dim * nq);
  values_.resize(ref->num_nodes(), nq);
  for (Index q = 0; q < nq; ++q) {
    grads_.middleCols(dim * q, dim) = ref->shape_gradients(rule_->points.col(q));
    values_.col(q) = ref->shape(rule_->points.col(q));
  }
}

std::shared_ptr<const ElementTables> ElementTables::get(int dim, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const ElementTables>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, degree}];
  if (!slot) slot = std::make_shared<ElementTables>(dim, degree);
  return slot;
}

namespace {

template <int N>
ElementKernelResult kernel_impl(const HighOrderMesh& mesh, Index e, int order, HessianBlocks blocks) {
  using Mat = Eigen::Matrix<double, N, N>;
  const auto tab = ElementTables::get(N, mesh.degree());
  const auto& R = tab->stacked_gradients();
  const auto& w = tab->rule().weights;
  const Index nn = R.rows();
  const Index nq = w.size();
  const Mat Linv = mesh.linear_jacobian_inverse(e);
  const double scale = mesh.linear_jacobian_det(e);
  const Eigen::MatrixXd X = mesh.element_coords(e);
  const Eigen::Matrix<double, N, Eigen::Dynamic> Jp = X.transpose() * R;

  ElementKernelResult out;
  std::vector<DistortionPoint<double, N>> pts;
  pts.reserve(nq);
  for (Index q = 0; q < nq; ++q) {
    pts.emplace_back(Mat(Jp.template middleCols<N>(N * q) * Linv));
    if (!pts.back().valid) {
      if (order == 0) {
        out.energy = std::numeric_limits<double>::infinity();
        return out;
      }
      throw Error(ErrorCategory::InvalidConfiguration,
                  "element " + std::to_string(e) + " has a non-positive Jacobian at a quadrature point");
    }
    out.energy += w(q) * scale * pts.back().f;
  }
  if (order < 1) return out;

  Eigen::MatrixXd S(N * nq, N);
  for (Index q = 0; q < nq; ++q)
    S.template middleRows<N>(N * q) = (w(q) * scale) * Linv * pts[q].gradient().transpose();
  out.gradient.noalias() = R * S;
  if (order < 2) return out;

  out.hessian = Eigen::MatrixXd::Zero(N * nn, N * nn);
  Eigen::MatrixXd W(nn, N * nq);
  Eigen::MatrixXd block(nn, nn);
  for (int k = 0; k < N; ++k)
    for (int l = k; l < N; ++l) {
      if (blocks == HessianBlocks::Diagonal && l != k) continue;
      for (Index q = 0; q < nq; ++q) {
        const Mat D = (w(q) * scale) * Linv * pts[q].hessian_block(k, l) * Linv.transpose();
        W.template middleCols<N>(N * q).noalias() = R.template middleCols<N>(N * q) * D;
      }
      block.noalias() = W * R.transpose();
      out.hessian.block(k * nn, l * nn, nn, nn) = block;
      if (l != k) out.hessian.block(l * nn, k * nn, nn, nn) = block.transpose();
    }
  return out;
}

template <int N>
void point_values(const HighOrderMesh& mesh, Index e, Eigen::VectorXd& f, Eigen::VectorXd& det) {
  using Mat = Eigen::Matrix<double, N, N>;
  const auto tab = ElementTables::get(N, mesh.degree());
  const auto& R = tab->stacked_gradients();
  const Index nq = tab->rule().size();
  const Mat Linv = mesh.linear_jacobian_inverse(e);
  const Eigen::Matrix<double, N, Eigen::Dynamic> Jp = mesh.element_coords(e).transpose() * R;
  f.resize(nq);
  det.resize(nq);
  for (Index q = 0; q < nq; ++q) {
    const Mat J = Jp.template middleCols<N>(N * q) * Linv;
    det(q) = J.determinant();
    const double eta = pointwise_distortion(J);
    f(q) = eta * eta;
  }
}

void point_values(const HighOrderMesh& mesh, Index e, Eigen::VectorXd& f, Eigen::VectorXd& det) {
  if (mesh.dim() == 2) point_values<2>(mesh, e, f, det);
  else point_values<3>(mesh, e, f, det);
}

}  // namespace

ElementKernelResult element_kernel(const HighOrderMesh& mesh, Index elem, int order,
                                   HessianBlocks blocks) {
  if (elem < 0 || elem >= mesh.num_elements())
    throw Error(ErrorCategory::Parameter, "element index out of range");
  if (order < 0 || order > 2) throw Error(ErrorCategory::Parameter, "kernel order must be 0, 1 or 2");
  return mesh.dim() == 2 ? kernel_impl<2>(mesh, elem, order, blocks)
                         : kernel_impl<3>(mesh, elem, order, blocks);
}

double element_energy(const HighOrderMesh& mesh, Index elem) {
  return element_kernel(mesh, elem, 0).energy;
}

double element_quality(const HighOrderMesh& mesh, Index elem) {
  Eigen::VectorXd f, det;
  point_values(mesh, elem, f, det);
  if ((det.array() <= 0.0).any()) return 0.0;
  const auto& w = ElementTables::get(mesh.dim(), mesh.degree())->rule().weights;
  const double mean = w.dot(f) / w.sum();
  return 1.0 / std::sqrt(mean);
}

double element_min_jacobian(const HighOrderMesh& mesh, Index elem) {
  Eigen::VectorXd f, det;
  point_values(mesh, elem, f, det);
  return det.minCoeff();
}

QualityReport quality_report(const HighOrderMesh& mesh) {
  QualityReport r;
  const Index ne = mesh.num_elements();
  r.quality.resize(ne);
  Eigen::VectorXd minj(ne);
  parallel_for(ne, [&](Index s, Index t) {
    for (Index e = s; e < t; ++e) {
      r.quality(e) = element_quality(mesh, e);
      minj(e) = element_min_jacobian(mesh, e);
    }
  });
  if (ne == 0) return r;
  r.min_quality = r.quality.minCoeff();
  r.max_quality = r.quality.maxCoeff();
  r.mean_quality = r.quality.mean();
  r.min_jacobian = minj.minCoeff();
  r.invalid_elements = (minj.array() <= 0.0).count();
  return r;
}

}  // namespace hocurve
