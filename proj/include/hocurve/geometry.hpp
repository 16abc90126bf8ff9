#pragma once

#include "hocurve/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hocurve {

enum class EntityType { Point, Circle, Sphere, Cylinder, Plane };

/// Analytic geometric entity. Coordinates are always three-dimensional;
/// planar meshes live in z = 0.
///
///  - Point:    origin
///  - Circle:   origin (center), axis (normal of its plane), radius
///  - Sphere:   origin (center), radius
///  - Cylinder: origin (point on the axis), axis, radius
///  - Plane:    origin (point on the plane), axis (normal)
struct Entity {
  EntityType type = EntityType::Point;
  std::string name;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double radius = 0.0;

  /// Topological dimension: 0 point, 1 circle, 2 surfaces.
  int dimension() const;

  static Entity point(const Eigen::Vector3d& p);
  static Entity circle(const Eigen::Vector3d& center, const Eigen::Vector3d& axis, double radius);
  static Entity sphere(const Eigen::Vector3d& center, double radius);
  static Entity cylinder(const Eigen::Vector3d& point, const Eigen::Vector3d& axis, double radius);
  static Entity plane(const Eigen::Vector3d& point, const Eigen::Vector3d& normal);
};

/// Closest point of the entity to x. Throws a projection error at points
/// where it is not unique (sphere center, cylinder axis, circle axis).
Eigen::Vector3d project(const Entity& entity, const Eigen::Vector3d& x);

/// Rotation about the axis through `center` by `angle` radians, taking the
/// source boundary onto the target boundary.
struct PeriodicPair {
  int source = 0;
  int target = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double angle = 0.0;

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const;
};

/// Entities, marker groups and periodic pairs.
class GeometryModel {
 public:
  /// Index of the new entity.
  int add_entity(Entity entity);
  void set_group(int marker, int entity);
  void add_periodic(const PeriodicPair& pair);

  const std::vector<Entity>& entities() const { return entities_; }
  const std::map<int, int>& groups() const { return groups_; }
  const std::vector<PeriodicPair>& periodic() const { return periodic_; }

  /// Entity of a marker; throws a config error when unmapped.
  const Entity& entity_of(int marker) const;

  /// Checks that every boundary marker of the mesh is mapped and that every
  /// periodic marker is mapped and distinct. Throws a config error.
  void validate(const HighOrderMesh& mesh) const;

  /// JSON text in the format described in docs/geometry.md.
  static GeometryModel parse(const std::string& text);
  static GeometryModel load(const std::filesystem::path& path);
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<Entity> entities_;
  std::map<int, int> groups_;
  std::vector<PeriodicPair> periodic_;
};

/// Circles of the given radii for markers::inner/outer (dim 2) or spheres
/// (dim 3), centred at the origin.
GeometryModel shell_model(double inner_radius, double outer_radius, int dim);

/// Annular sector model: circles for the arcs, lines through the origin for
/// the cuts and a periodic pair mapping the angle-0 cut onto the other one.
GeometryModel sector_model(double inner_radius, double outer_radius, double angle);

/// Planes for every face of the box [0, size]^dim with generate_box_mesh
/// markers.
GeometryModel box_model(double size, int dim);

/// Target positions of the boundary nodes, dim x boundary_nodes().size().
struct BoundaryTarget {
  Eigen::MatrixXd positions;
};

/// Projection data bound to one mesh topology: node classification and the
/// periodic node matching.
class BoundaryProjector {
 public:
  /// Classifies the boundary nodes and matches periodic nodes using the
  /// reference (initial linear) configuration. Throws config or periodic
  /// matching errors.
  BoundaryProjector(const GeometryModel& model, const HighOrderMesh& mesh);

  /// Projects each boundary node onto its entity, then overwrites periodic
  /// target-side nodes by the rotated targets of their partners.
  BoundaryTarget evaluate(const HighOrderMesh& mesh) const;

  /// Entities a boundary slot is projected onto (more than one for nodes on
  /// the junction of same-dimensional groups).
  const std::vector<int>& classification(Index slot) const { return classes_[slot]; }
  /// (source slot, target slot) pairs of periodic pair i.
  const std::vector<std::pair<Index, Index>>& periodic_nodes(std::size_t i) const {
    return matches_[i];
  }

 private:
  GeometryModel model_;
  std::vector<std::vector<int>> classes_;
  std::vector<std::vector<std::pair<Index, Index>>> matches_;
};

BoundaryTarget evaluate_boundary_target(const HighOrderMesh& mesh, const GeometryModel& model);

/// sqrt of the boundary integral of |Tr phi - g_D|^2 over the linear faces.
double boundary_error(const HighOrderMesh& mesh, const BoundaryTarget& target);

/// boundary_error divided by the square root of the boundary measure.
double constraint_norm(const HighOrderMesh& mesh, const BoundaryTarget& target);

}  // namespace hocurve
