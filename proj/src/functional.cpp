#include "hocurve/functional.hpp"

#include "hocurve/distortion.hpp"
#include "hocurve/error.hpp"
#include "hocurve/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hocurve {

namespace {

constexpr Index kBatch = 256;

// Element results are computed in parallel per batch and accumulated in
// element order, so sums do not depend on the thread count.
template <class Local, class Accumulate>
void batched(Index ne, Local&& local, Accumulate&& accumulate) {
  for (Index b0 = 0; b0 < ne; b0 += kBatch) {
    const Index nb = std::min(kBatch, ne - b0);
    parallel_for(nb, [&](Index s, Index t) {
      for (Index i = s; i < t; ++i) local(b0 + i, i);
    });
    for (Index i = 0; i < nb; ++i) accumulate(b0 + i, i);
  }
}

Eigen::VectorXd boundary_difference(const HighOrderMesh& mesh, const BoundaryTarget& target, int k) {
  const auto& bn = mesh.boundary_nodes();
  Eigen::VectorXd d(Index(bn.size()));
  for (Index s = 0; s < d.size(); ++s) d(s) = mesh.coords()(k, bn[s]) - target.positions(k, s);
  return d;
}

void check_target(const HighOrderMesh& mesh, const BoundaryTarget& target) {
  if (target.positions.rows() != mesh.dim() ||
      target.positions.cols() != Index(mesh.boundary_nodes().size()))
    throw Error(ErrorCategory::Parameter, "boundary target does not match the mesh");
}

}  // namespace

Eigen::VectorXd flatten_coords(const Eigen::MatrixXd& coords) {
  const Eigen::MatrixXd t = coords.transpose();
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

Eigen::MatrixXd unflatten_coords(const Eigen::VectorXd& x, int dim) {
  const Index n = x.size() / dim;
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, dim).transpose();
}

NodeGraph::NodeGraph(const HighOrderMesh& mesh) {
  const Index nn = mesh.num_nodes();
  const auto& conn = mesh.elements();
  std::vector<std::vector<int>> rows(nn);
  for (Index e = 0; e < conn.cols(); ++e)
    for (Index a = 0; a < conn.rows(); ++a) {
      auto& row = rows[conn(a, e)];
      for (Index b = 0; b < conn.rows(); ++b) row.push_back(int(conn(b, e)));
    }
  offsets_.assign(nn + 1, 0);
  for (Index i = 0; i < nn; ++i) {
    auto& row = rows[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    offsets_[i + 1] = offsets_[i] + int(row.size());
  }
  columns_.reserve(offsets_.back());
  for (auto& row : rows) {
    columns_.insert(columns_.end(), row.begin(), row.end());
    std::vector<int>().swap(row);
  }
}

int NodeGraph::find(Index i, Index j) const {
  const auto first = columns_.begin() + offsets_[i];
  const auto last = columns_.begin() + offsets_[i + 1];
  const auto it = std::lower_bound(first, last, int(j));
  return (it != last && *it == j) ? int(it - first) : -1;
}

namespace {

double distortion_energy(const HighOrderMesh& mesh) {
  const Index ne = mesh.num_elements();
  std::vector<double> local(kBatch);
  double energy = 0.0;
  batched(
      ne, [&](Index e, Index slot) { local[slot] = element_energy(mesh, e); },
      [&](Index, Index slot) { energy += local[slot]; });
  return energy / mesh.volume();
}

Eigen::VectorXd distortion_gradient(const HighOrderMesh& mesh) {
  const int dim = mesh.dim();
  const Index n = mesh.num_nodes();
  const auto& conn = mesh.elements();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim * n);
  std::vector<Eigen::MatrixXd> local(kBatch);
  const double scale = 1.0 / mesh.volume();
  batched(
      mesh.num_elements(), [&](Index e, Index slot) { local[slot] = element_kernel(mesh, e, 1).gradient; },
      [&](Index e, Index slot) {
        const auto& G = local[slot];
        for (int k = 0; k < dim; ++k)
          for (Index a = 0; a < conn.rows(); ++a) g(k * n + conn(a, e)) += scale * G(a, k);
      });
  return g;
}

double boundary_integral(const HighOrderMesh& mesh, const std::vector<Eigen::VectorXd>& d) {
  double sum = 0.0;
  for (const auto& dk : d) sum += dk.dot(mesh.boundary_mass() * dk);
  return std::max(sum, 0.0);
}

void add_boundary_gradient(const HighOrderMesh& mesh, const std::vector<Eigen::VectorXd>& d, double mu,
                           Eigen::VectorXd& g) {
  const auto& bn = mesh.boundary_nodes();
  const Index n = mesh.num_nodes();
  const double pscale = 2.0 * mu / mesh.boundary_measure();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const Eigen::VectorXd md = mesh.boundary_mass() * d[k];
    for (Index s = 0; s < md.size(); ++s) g(Index(k) * n + bn[s]) += pscale * md(s);
  }
}

std::vector<Eigen::VectorXd> coordinate_differences(const HighOrderMesh& mesh, const BoundaryTarget& target) {
  std::vector<Eigen::VectorXd> d;
  for (int k = 0; k < mesh.dim(); ++k) d.push_back(boundary_difference(mesh, target, k));
  return d;
}

}  // namespace

PenaltyValue penalty_value(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu) {
  check_target(mesh, target);
  PenaltyValue out;
  out.energy = distortion_energy(mesh);
  out.penalty = boundary_integral(mesh, coordinate_differences(mesh, target)) / mesh.boundary_measure();
  out.value = out.energy + mu * out.penalty;
  return out;
}

Eigen::VectorXd penalty_gradient(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu) {
  check_target(mesh, target);
  Eigen::VectorXd g = distortion_gradient(mesh);
  add_boundary_gradient(mesh, coordinate_differences(mesh, target), mu, g);
  return g;
}

PenaltyProblem::PenaltyProblem(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu)
    : mesh_(mesh), reference_(flatten_coords(mesh.reference_coords())), mu_(mu) {
  check_target(mesh, target);
  const auto& bn = mesh.boundary_nodes();
  for (int k = 0; k < mesh.dim(); ++k) {
    Eigen::VectorXd b(Index(bn.size()));
    for (Index s = 0; s < b.size(); ++s) b(s) = mesh.reference_coords()(k, bn[s]) - target.positions(k, s);
    offset_.push_back(std::move(b));
  }
}

Eigen::VectorXd PenaltyProblem::displacement(const HighOrderMesh& mesh) const {
  return flatten_coords(mesh.coords()) - reference_;
}

HighOrderMesh PenaltyProblem::mesh_at(const Eigen::VectorXd& u) const {
  return mesh_.with_coords(unflatten_coords(reference_ + u, mesh_.dim()));
}

std::vector<Eigen::VectorXd> PenaltyProblem::differences(const Eigen::VectorXd& u) const {
  const auto& bn = mesh_.boundary_nodes();
  const Index n = mesh_.num_nodes();
  std::vector<Eigen::VectorXd> d = offset_;
  for (std::size_t k = 0; k < d.size(); ++k)
    for (Index s = 0; s < d[k].size(); ++s) d[k](s) += u(Index(k) * n + bn[s]);
  return d;
}

PenaltyValue PenaltyProblem::value(const Eigen::VectorXd& u) const {
  const HighOrderMesh m = mesh_at(u);
  PenaltyValue out;
  out.energy = distortion_energy(m);
  out.penalty = boundary_integral(m, differences(u)) / m.boundary_measure();
  out.value = out.energy + mu_ * out.penalty;
  return out;
}

Eigen::VectorXd PenaltyProblem::gradient(const Eigen::VectorXd& u) const {
  Eigen::VectorXd g = distortion_gradient(mesh_at(u));
  add_boundary_gradient(mesh_, differences(u), mu_, g);
  return g;
}

double PenaltyProblem::boundary_error(const Eigen::VectorXd& u) const {
  return std::sqrt(boundary_integral(mesh_, differences(u)));
}

struct HessianOperator::Impl {
  HighOrderMesh mesh;
  double mu = 0.0;
  std::shared_ptr<const ElementTables> tables;
  // Relative Jacobian at every quadrature point, dim x dim column-major,
  // element-major then point-major.
  std::vector<double> jac;

  template <int N>
  void store_jacobians() {
    const auto& R = tables->stacked_gradients();
    const Index nq = tables->rule().size();
    const Index ne = mesh.num_elements();
    jac.resize(std::size_t(ne * nq * N * N));
    parallel_for(ne, [&](Index s, Index t) {
      for (Index e = s; e < t; ++e) {
        const Eigen::Matrix<double, N, N> Linv = mesh.linear_jacobian_inverse(e);
        const Eigen::Matrix<double, N, Eigen::Dynamic> Jp = mesh.element_coords(e).transpose() * R;
        for (Index q = 0; q < nq; ++q) {
          Eigen::Map<Eigen::Matrix<double, N, N>> J(jac.data() + (e * nq + q) * N * N);
          J = Jp.template middleCols<N>(N * q) * Linv;
          if (!(J.determinant() > 0.0))
            throw Error(ErrorCategory::InvalidConfiguration,
                        "element " + std::to_string(e) + " has a non-positive Jacobian at a quadrature point");
        }
      }
    });
  }

  template <int N>
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    using Mat = Eigen::Matrix<double, N, N>;
    using Local = Eigen::Matrix<double, Eigen::Dynamic, N>;
    const auto& R = tables->stacked_gradients();
    const auto& w = tables->rule().weights;
    const Index nq = w.size();
    const Index nn = R.rows();
    const Index n = mesh.num_nodes();
    const auto& conn = mesh.elements();
    const double vscale = 1.0 / mesh.volume();
    y.setZero(N * n);
    std::vector<Local> out(kBatch);
    batched(
        mesh.num_elements(),
        [&](Index e, Index slot) {
          Local V(nn, N);
          for (int k = 0; k < N; ++k)
            for (Index a = 0; a < nn; ++a) V(a, k) = x(k * n + conn(a, e));
          const Eigen::Matrix<double, N, Eigen::Dynamic> G = V.transpose() * R;
          const Mat Linv = mesh.linear_jacobian_inverse(e);
          const double scale = mesh.linear_jacobian_det(e) * vscale;
          Local S(N * nq, N);
          for (Index q = 0; q < nq; ++q) {
            const DistortionPoint<double, N> P(Mat(Eigen::Map<const Mat>(jac.data() + (e * nq + q) * N * N)));
            const Mat T = P.hessian_action(G.template middleCols<N>(N * q) * Linv);
            S.template middleRows<N>(N * q) = (w(q) * scale) * Linv * T.transpose();
          }
          out[slot].noalias() = R * S;
        },
        [&](Index e, Index slot) {
          const auto& Y = out[slot];
          for (int k = 0; k < N; ++k)
            for (Index a = 0; a < nn; ++a) y(k * n + conn(a, e)) += Y(a, k);
        });
    const auto& bn = mesh.boundary_nodes();
    const double pscale = 2.0 * mu / mesh.boundary_measure();
    Eigen::VectorXd xb(Index(bn.size()));
    for (int k = 0; k < N; ++k) {
      for (Index s = 0; s < xb.size(); ++s) xb(s) = x(k * n + bn[s]);
      const Eigen::VectorXd mx = mesh.boundary_mass() * xb;
      for (Index s = 0; s < xb.size(); ++s) y(k * n + bn[s]) += pscale * mx(s);
    }
  }
};

HessianOperator::HessianOperator(const HighOrderMesh& mesh, double mu,
                                 std::shared_ptr<const NodeGraph> graph)
    : impl_(std::make_unique<Impl>()), graph_(std::move(graph)) {
  impl_->mesh = mesh;
  impl_->mu = mu;
  impl_->tables = ElementTables::get(mesh.dim(), mesh.degree());
  if (mesh.dim() == 2) impl_->store_jacobians<2>();
  else impl_->store_jacobians<3>();
  if (!graph_) graph_ = std::make_shared<NodeGraph>(mesh);
}

HessianOperator::~HessianOperator() = default;

Eigen::Index HessianOperator::size() const { return impl_->mesh.dim() * impl_->mesh.num_nodes(); }

void HessianOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  if (x.size() != size()) throw Error(ErrorCategory::Parameter, "Hessian product: vector has the wrong size");
  if (impl_->mesh.dim() == 2) impl_->apply<2>(x, y);
  else impl_->apply<3>(x, y);
}

SparseMatrixR HessianOperator::assemble() const {
  const auto& mesh = impl_->mesh;
  const auto& G = *graph_;
  const int dim = mesh.dim();
  const Index n = mesh.num_nodes();
  const Index nnz_g = G.num_entries();
  const auto& off = G.offsets();
  const auto& cols = G.columns();

  SparseMatrixR A(dim * n, dim * n);
  A.resizeNonZeros(dim * dim * nnz_g);
  int* outer = A.outerIndexPtr();
  int* inner = A.innerIndexPtr();
  double* val = A.valuePtr();
  auto row_start = [&](int k, Index i) { return Index(k) * dim * nnz_g + Index(dim) * off[i]; };
  for (int k = 0; k < dim; ++k)
    for (Index i = 0; i < n; ++i) {
      const Index start = row_start(k, i);
      outer[k * n + i] = int(start);
      const int deg = G.degree(i);
      for (int l = 0; l < dim; ++l)
        for (int t = 0; t < deg; ++t) inner[start + l * deg + t] = int(l * n + cols[off[i] + t]);
    }
  outer[dim * n] = int(dim * dim * nnz_g);
  std::fill(val, val + dim * dim * nnz_g, 0.0);

  const auto& conn = mesh.elements();
  const Index nn = conn.rows();
  const double scale = 1.0 / mesh.volume();
  std::vector<Eigen::MatrixXd> local(kBatch);
  std::vector<int> pos(nn * nn);
  batched(
      mesh.num_elements(), [&](Index e, Index slot) { local[slot] = element_kernel(mesh, e, 2).hessian; },
      [&](Index e, Index slot) {
        const auto& H = local[slot];
        for (Index a = 0; a < nn; ++a)
          for (Index b = 0; b < nn; ++b) pos[a * nn + b] = G.find(conn(a, e), conn(b, e));
        for (int k = 0; k < dim; ++k)
          for (Index a = 0; a < nn; ++a) {
            const Index ga = conn(a, e);
            const Index start = row_start(k, ga);
            const int deg = G.degree(ga);
            for (int l = 0; l < dim; ++l)
              for (Index b = 0; b < nn; ++b)
                val[start + l * deg + pos[a * nn + b]] += scale * H(k * nn + a, l * nn + b);
          }
      });

  const auto& bn = mesh.boundary_nodes();
  const double pscale = 2.0 * impl_->mu / mesh.boundary_measure();
  const auto& M = mesh.boundary_mass();
  for (Index s = 0; s < M.outerSize(); ++s)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, s); it; ++it) {
      const Index i = bn[it.row()], j = bn[it.col()];
      const int p = G.find(i, j);
      for (int k = 0; k < dim; ++k) val[row_start(k, i) + k * G.degree(i) + p] += pscale * it.value();
    }
  return A;
}

std::vector<SparseMatrixR> HessianOperator::assemble_diagonal_blocks() const {
  const auto& mesh = impl_->mesh;
  const auto& G = *graph_;
  const int dim = mesh.dim();
  const Index n = mesh.num_nodes();
  const Index nnz_g = G.num_entries();

  std::vector<SparseMatrixR> blocks(dim);
  for (auto& B : blocks) {
    B.resize(n, n);
    B.resizeNonZeros(nnz_g);
    std::copy(G.offsets().begin(), G.offsets().end(), B.outerIndexPtr());
    std::copy(G.columns().begin(), G.columns().end(), B.innerIndexPtr());
    std::fill(B.valuePtr(), B.valuePtr() + nnz_g, 0.0);
  }

  const auto& conn = mesh.elements();
  const Index nn = conn.rows();
  const double scale = 1.0 / mesh.volume();
  std::vector<Eigen::MatrixXd> local(kBatch);
  batched(
      mesh.num_elements(),
      [&](Index e, Index slot) { local[slot] = element_kernel(mesh, e, 2, HessianBlocks::Diagonal).hessian; },
      [&](Index e, Index slot) {
        const auto& H = local[slot];
        for (Index a = 0; a < nn; ++a) {
          const Index ga = conn(a, e);
          const Index start = G.offsets()[ga];
          for (Index b = 0; b < nn; ++b) {
            const int p = G.find(ga, conn(b, e));
            for (int k = 0; k < dim; ++k)
              blocks[k].valuePtr()[start + p] += scale * H(k * nn + a, k * nn + b);
          }
        }
      });

  const auto& bn = mesh.boundary_nodes();
  const double pscale = 2.0 * impl_->mu / mesh.boundary_measure();
  const auto& M = mesh.boundary_mass();
  for (Index s = 0; s < M.outerSize(); ++s)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, s); it; ++it) {
      const Index i = bn[it.row()], j = bn[it.col()];
      const Index p = G.offsets()[i] + G.find(i, j);
      for (int k = 0; k < dim; ++k) blocks[k].valuePtr()[p] += pscale * it.value();
    }
  return blocks;
}

}  // namespace hocurve
