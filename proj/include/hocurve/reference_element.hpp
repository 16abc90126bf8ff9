#pragma once

#include <Eigen/Core>

#include <array>
#include <memory>
#include <vector>

namespace hocurve {

/// Barycentric multi-index of a lattice node: entries sum to the degree.
/// Entry 0 belongs to reference vertex 0 (the origin), entry k >= 1 to the
/// vertex at the k-th unit vector.
using MultiIndex = std::array<int, 4>;

/// Reference simplex (segment, triangle, tetrahedron) carrying the Lagrange
/// basis on the equispaced barycentric lattice of a given degree.
///
/// Node ordering ("lattice ordering"): integer coordinates (i, j, k) with
/// i + j + k <= p, enumerated with i fastest, then j, then k. The node sits at
/// xi = (i, j, k) / p. Faces are numbered by their opposite vertex; the face
/// vertex lists are oriented so that the face normal points outward for a
/// positively oriented element.
class ReferenceElement {
 public:
  ReferenceElement(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int num_nodes() const { return static_cast<int>(indices_.size()); }
  int num_vertices() const { return dim_ + 1; }

  /// Reference coordinates, one column per node.
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const MultiIndex& multi_index(int node) const { return indices_[node]; }
  /// Lattice position of a multi-index, or -1 if it is not a node.
  int node_of(const MultiIndex& alpha) const;
  int vertex_node(int v) const { return vertex_nodes_[v]; }

  /// Element vertices spanning face f (the face opposite vertex f).
  const std::vector<int>& face_vertices(int f) const { return face_vertices_[f]; }
  /// Element-local nodes of face f, ordered by the lattice ordering of the
  /// (dim-1)-simplex whose vertex k is face_vertices(f)[k].
  const std::vector<int>& face_nodes(int f) const { return face_nodes_[f]; }

  Eigen::VectorXd shape(const Eigen::Ref<const Eigen::VectorXd>& xi) const;
  /// Reference gradients, num_nodes x dim.
  Eigen::MatrixXd shape_gradients(const Eigen::Ref<const Eigen::VectorXd>& xi) const;

  /// Shared instance for (dim, degree).
  static std::shared_ptr<const ReferenceElement> get(int dim, int degree);

 private:
  int dim_;
  int degree_;
  std::vector<MultiIndex> indices_;
  Eigen::MatrixXd nodes_;
  std::vector<int> vertex_nodes_;
  std::vector<std::vector<int>> face_vertices_;
  std::vector<std::vector<int>> face_nodes_;
};

/// Number of lattice nodes of a degree-p simplex in dimension dim.
int lattice_size(int dim, int degree);

/// Lattice multi-indices in lattice ordering.
std::vector<MultiIndex> lattice_indices(int dim, int degree);

}  // namespace hocurve
