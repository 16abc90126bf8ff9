#pragma once

#include "hocurve/geometry.hpp"
#include "hocurve/linsolve.hpp"
#include "hocurve/mesh.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace hocurve {

/// Nodal coordinates flattened component-major: entry k * num_nodes + i is
/// component k of node i.
Eigen::VectorXd flatten_coords(const Eigen::MatrixXd& coords);
Eigen::MatrixXd unflatten_coords(const Eigen::VectorXd& x, int dim);

/// Nodes sharing an element, one sorted row per node (the node itself
/// included).
class NodeGraph {
 public:
  explicit NodeGraph(const HighOrderMesh& mesh);

  Index num_nodes() const { return Index(offsets_.size()) - 1; }
  Index num_entries() const { return offsets_.back(); }
  const std::vector<int>& offsets() const { return offsets_; }
  const std::vector<int>& columns() const { return columns_; }
  int degree(Index i) const { return offsets_[i + 1] - offsets_[i]; }
  /// Position of column j in the entries of row i, or -1.
  int find(Index i, Index j) const;

 private:
  std::vector<int> offsets_;
  std::vector<int> columns_;
};

/// F = E / |T_I| + mu * B / |dT_I| with E the distortion energy and
/// B = |Tr phi - g_D|^2 over the boundary of the reference mesh.
struct PenaltyValue {
  double value = 0.0;
  double energy = 0.0;   ///< E / |T_I|
  double penalty = 0.0;  ///< B / |dT_I|
};

/// Value of the penalty functional; +infinity terms when any element is
/// invalid at a quadrature point.
PenaltyValue penalty_value(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu);

/// Gradient over all nodal coordinates, component-major. Throws an
/// invalid-configuration error on invalid elements.
Eigen::VectorXd penalty_gradient(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu);

/// The penalty functional as a function of the nodal displacement u from the
/// reference configuration (component-major). Boundary differences are
/// formed as (x_ref - g_D) + u, so their resolution is set by the size of u
/// rather than by the size of the coordinates.
class PenaltyProblem {
 public:
  PenaltyProblem(const HighOrderMesh& mesh, const BoundaryTarget& target, double mu);

  Eigen::VectorXd displacement(const HighOrderMesh& mesh) const;
  HighOrderMesh mesh_at(const Eigen::VectorXd& u) const;

  PenaltyValue value(const Eigen::VectorXd& u) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  /// sqrt of the boundary integral of |Tr phi - g_D|^2.
  double boundary_error(const Eigen::VectorXd& u) const;
  double mu() const { return mu_; }

 private:
  std::vector<Eigen::VectorXd> differences(const Eigen::VectorXd& u) const;

  HighOrderMesh mesh_;
  Eigen::VectorXd reference_;
  /// x_ref - g_D on the boundary nodes, one vector per component.
  std::vector<Eigen::VectorXd> offset_;
  double mu_;
};

/// Hessian of the penalty functional at the mesh coordinates. The product is
/// evaluated element by element from the Jacobians at the quadrature points;
/// assembly into compressed rows is available for the full matrix and for
/// its per-component diagonal blocks.
class HessianOperator final : public LinearOperator {
 public:
  HessianOperator(const HighOrderMesh& mesh, double mu, std::shared_ptr<const NodeGraph> graph = nullptr);
  ~HessianOperator() override;

  Eigen::Index size() const override;
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override;

  /// Full matrix; rows are component-major unknowns.
  SparseMatrixR assemble() const;
  /// H_kk for k = 0..dim-1, each num_nodes x num_nodes.
  std::vector<SparseMatrixR> assemble_diagonal_blocks() const;

  const NodeGraph& graph() const { return *graph_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<const NodeGraph> graph_;
};

}  // namespace hocurve
