#pragma once

#include "hocurve/reference_element.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace hocurve {

using Index = Eigen::Index;
using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

struct BoundaryFace {
  Index element = 0;
  int local_face = 0;  ///< face opposite this local vertex
  int marker = 0;
};

/// Boundary face of a linear mesh given by vertex ids.
struct LinearFace {
  std::vector<Index> vertices;
  int marker = 0;
};

struct MapEvaluation {
  Eigen::VectorXd x;
  /// Jacobian of the physical map relative to the linear reference element.
  Eigen::MatrixXd jacobian;
};

struct MeshTopology;

/// Nodal simplicial mesh of degree p. The node coordinates define the curved
/// map; the reference configuration (the initial linear mesh interpolated at
/// the same lattice) is frozen and shared between copies. Copies are cheap:
/// only the coordinate matrix is duplicated.
class HighOrderMesh {
 public:
  HighOrderMesh() = default;

  /// Degree-1 mesh from vertices (dim x nv), simplices ((dim+1) x ne) and
  /// marked boundary faces. Throws on inverted/degenerate simplices or faces
  /// that are not on the boundary.
  static HighOrderMesh from_linear(const Eigen::MatrixXd& vertices,
                                   const IndexMatrix& simplices,
                                   const std::vector<LinearFace>& faces);

  /// Mesh from explicit nodal data (element columns in lattice ordering).
  static HighOrderMesh from_nodes(int degree, const Eigen::MatrixXd& coords,
                                  const Eigen::MatrixXd& reference_coords,
                                  const IndexMatrix& elements,
                                  std::vector<BoundaryFace> faces);

  int dim() const;
  int degree() const;
  Index num_nodes() const { return coords_.cols(); }
  Index num_elements() const;
  const ReferenceElement& reference() const;

  const Eigen::MatrixXd& coords() const { return coords_; }
  const Eigen::MatrixXd& reference_coords() const;
  const IndexMatrix& elements() const;
  const std::vector<BoundaryFace>& boundary_faces() const;
  /// Sorted global ids of nodes lying on boundary faces.
  const std::vector<Index>& boundary_nodes() const;
  /// Position of node in boundary_nodes(), or -1.
  Index boundary_slot(Index node) const;

  /// Inverse Jacobian of the affine map of element e in the reference mesh.
  Eigen::Map<const Eigen::MatrixXd> linear_jacobian_inverse(Index e) const;
  /// |det| of the affine Jacobian of element e in the reference mesh.
  double linear_jacobian_det(Index e) const;

  /// Boundary mass matrix over boundary_nodes() for the trace of the degree-p
  /// basis on the linear boundary faces.
  const Eigen::SparseMatrix<double>& boundary_mass() const;
  /// Measure of the reference domain, ||1||^2 over T_I.
  double volume() const;
  /// Measure of the reference boundary, ||1||^2 over dT_I.
  double boundary_measure() const;
  /// Bounding-box diagonal of the reference mesh.
  double characteristic_length() const;

  /// Same topology and reference, new coordinates.
  HighOrderMesh with_coords(Eigen::MatrixXd coords) const;

  /// Element-local coordinates, num_nodes_per_element x dim.
  Eigen::MatrixXd element_coords(Index e) const;

 private:
  std::shared_ptr<const MeshTopology> topo_;
  Eigen::MatrixXd coords_;
};

/// Physical point and relative Jacobian J_phys * J_lin^{-1} at xi.
MapEvaluation evaluate_map(const HighOrderMesh& mesh, Index elem,
                           const Eigen::Ref<const Eigen::VectorXd>& xi);

/// Re-represents the map with degree-p_new polynomials (p_new > p). The
/// geometric map is unchanged; the reference configuration is re-sampled at
/// the new lattice.
HighOrderMesh interpolate_to_degree(const HighOrderMesh& mesh, int p_new);

}  // namespace hocurve
