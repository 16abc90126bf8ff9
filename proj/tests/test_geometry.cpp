#include "support.hpp"

#include "hocurve/error.hpp"
#include "hocurve/generators.hpp"
#include "hocurve/geometry.hpp"
#include "hocurve/quadrature.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

using namespace hocurve;
using namespace hocurve::testing;

namespace {

ErrorCategory category_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an error");
  return ErrorCategory::Io;
}

Eigen::Vector3d random_point(std::mt19937_64& rng, double scale = 5.0) {
  return scale * random_vector(3, rng);
}

// A point of the entity, sampled from a parametrization.
Eigen::Vector3d entity_point(const Entity& e, std::mt19937_64& rng) {
  const Eigen::Vector3d a = e.axis.normalized();
  Eigen::Vector3d u = a.unitOrthogonal(), v = a.cross(u);
  std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi), t(-5.0, 5.0);
  const double th = ang(rng), ph = ang(rng) / 2;
  switch (e.type) {
    case EntityType::Point: return e.origin;
    case EntityType::Circle: return e.origin + e.radius * (std::cos(th) * u + std::sin(th) * v);
    case EntityType::Sphere:
      return e.origin + e.radius * Eigen::Vector3d(std::sin(ph) * std::cos(th), std::sin(ph) * std::sin(th),
                                                   std::cos(ph));
    case EntityType::Cylinder: return e.origin + t(rng) * a + e.radius * (std::cos(th) * u + std::sin(th) * v);
    case EntityType::Plane: return e.origin + t(rng) * u + t(rng) * v;
  }
  return e.origin;
}

// sqrt(integral |phi - g|^2 / measure) over the boundary with a high-order
// rule, g being the interpolant of the nodal targets.
double constraint_norm_oracle(const HighOrderMesh& m, const BoundaryTarget& g) {
  const int dim = m.dim();
  const ReferenceElement face(dim - 1, m.degree());
  const QuadratureRule& q = cached_simplex_rule(dim - 1, 16);
  double num = 0, den = 0;
  for (const BoundaryFace& f : m.boundary_faces()) {
    const auto& nodes = m.reference().face_nodes(f.local_face);
    Eigen::MatrixXd d(dim, nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
      const Index n = m.elements()(nodes[i], f.element);
      d.col(Index(i)) = m.coords().col(n) - g.positions.col(m.boundary_slot(n));
    }
    const auto& fv = m.reference().face_vertices(f.local_face);
    Eigen::MatrixXd edges(dim, dim - 1);
    const Eigen::VectorXd x0 = m.reference_coords().col(m.elements()(m.reference().vertex_node(fv[0]), f.element));
    for (int k = 1; k < dim; ++k)
      edges.col(k - 1) = m.reference_coords().col(m.elements()(m.reference().vertex_node(fv[k]), f.element)) - x0;
    const double jac = std::sqrt((edges.transpose() * edges).determinant());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd v = d * face.shape(q.points.col(i));
      num += q.weights(i) * jac * v.squaredNorm();
      den += q.weights(i) * jac;
    }
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("projection examples") {
  const Entity unit = Entity::sphere(Eigen::Vector3d::Zero(), 1.0);
  CHECK((project(unit, {2, 0, 0}) - Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
  CHECK((project(unit, {3, 4, 0}) - Eigen::Vector3d(0.6, 0.8, 0)).norm() < 1e-15);
  const Entity xy = Entity::plane(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ());
  CHECK((project(xy, {1, 2, 5}) - Eigen::Vector3d(1, 2, 0)).norm() < 1e-15);
  CHECK(category_of([&] { project(unit, Eigen::Vector3d::Zero()); }) == ErrorCategory::Projection);
  const Entity cyl = Entity::cylinder(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 2.0);
  CHECK((project(cyl, {3, 0, 7}) - Eigen::Vector3d(2, 0, 7)).norm() < 1e-15);
  CHECK(category_of([&] { project(cyl, {0, 0, 3}); }) == ErrorCategory::Projection);
  const Entity circ = Entity::circle(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1.0);
  CHECK((project(circ, {0, 3, 4}) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
  const Entity pt = Entity::point({1, 2, 3});
  CHECK((project(pt, {5, 5, 5}) - Eigen::Vector3d(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("projection is idempotent and closest") {
  std::mt19937_64 rng(47);
  const std::vector<Entity> entities = {
      Entity::point({0.5, -1, 2}),
      Entity::circle({1, 0, 0}, Eigen::Vector3d(1, 2, 3).normalized(), 1.5),
      Entity::sphere({0, 1, -1}, 2.0),
      Entity::cylinder({0, 0, 1}, Eigen::Vector3d(0, 1, 1).normalized(), 0.7),
      Entity::plane({1, 1, 1}, Eigen::Vector3d(1, -1, 2).normalized()),
  };
  for (const Entity& e : entities) {
    for (int t = 0; t < 20; ++t) {
      const Eigen::Vector3d x = random_point(rng);
      const Eigen::Vector3d p = project(e, x);
      CHECK((project(e, p) - p).norm() <= 1e-13 * std::max(1.0, p.norm()));
      // p lies on the entity: projecting any entity point is exact.
      const Eigen::Vector3d y0 = entity_point(e, rng);
      CHECK((project(e, y0) - y0).norm() < 1e-13 * std::max(1.0, y0.norm()));
      for (int s = 0; s < 100; ++s) {
        const Eigen::Vector3d y = entity_point(e, rng);
        CHECK((p - x).norm() <= (y - x).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("geometry config parsing") {
  const std::string text = R"({
    "entities": [
      {"type": "sphere", "center": [0, 0, 0], "radius": 1, "name": "inner"},
      {"type": "sphere", "center": [0, 0, 0], "radius": 4},
      {"type": "plane", "point": [0, 0, 0], "normal": [0, 1, 0]},
      {"type": "cylinder", "point": [0, 0, 0], "axis": [0, 0, 1], "radius": 2},
      {"type": "circle", "center": [0, 0, 0], "axis": [0, 0, 1], "radius": 3},
      {"type": "point", "point": [1, 2, 3]}
    ],
    "groups": {"1": "inner", "2": 1, "3": 2},
    "periodic": [{"source": 3, "target": 2, "axis": [0, 0, 1], "angle": 0.5}]
  })";
  const GeometryModel m = GeometryModel::parse(text);
  REQUIRE(m.entities().size() == 6);
  CHECK(m.entities()[0].type == EntityType::Sphere);
  CHECK(m.entities()[3].type == EntityType::Cylinder);
  CHECK(m.entity_of(1).radius == 1.0);
  CHECK(m.entity_of(2).radius == 4.0);
  CHECK(m.entity_of(3).type == EntityType::Plane);
  REQUIRE(m.periodic().size() == 1);
  CHECK(m.periodic()[0].angle == 0.5);

  const GeometryModel again = GeometryModel::parse(m.to_json());
  CHECK(again.to_json() == m.to_json());

  CHECK(category_of([] { GeometryModel::parse("{ not json"); }) == ErrorCategory::Parse);
  CHECK(category_of([] { GeometryModel::parse(R"({"entities": [{"type": "torus"}], "groups": {}})"); }) ==
        ErrorCategory::Config);
  CHECK(category_of([] {
          GeometryModel::parse(R"({"entities": [{"type": "sphere", "center": [0,0,0], "radius": 1}],
                                   "groups": {"1": 5}})");
        }) == ErrorCategory::Config);
  CHECK(category_of([&] { m.entity_of(9); }) == ErrorCategory::Config);
}

TEST_CASE("unmapped markers are rejected") {
  const HighOrderMesh mesh = generate_shell_mesh(1.0, 4.0, 1, 2);
  GeometryModel model;
  model.set_group(1, model.add_entity(Entity::circle(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1.0)));
  CHECK(category_of([&] { model.validate(mesh); }) == ErrorCategory::Config);
  CHECK(category_of([&] { BoundaryProjector(model, mesh); }) == ErrorCategory::Config);
}

TEST_CASE("boundary targets of a shell") {
  for (int dim = 2; dim <= 3; ++dim) {
    const HighOrderMesh mesh = interpolate_to_degree(generate_shell_mesh(1.0, 4.0, 1, dim), 2);
    const GeometryModel model = shell_model(1.0, 4.0, dim);
    const BoundaryTarget g = evaluate_boundary_target(mesh, model);
    const auto& nodes = mesh.boundary_nodes();
    for (size_t s = 0; s < nodes.size(); ++s) {
      const double r = g.positions.col(Index(s)).norm();
      CHECK((std::abs(r - 1.0) < 1e-13 || std::abs(r - 4.0) < 1e-13 * 4));
    }
    // Vertices already lie on the spheres: their targets equal their positions.
    const HighOrderMesh linear = generate_shell_mesh(1.0, 4.0, 1, dim);
    const BoundaryTarget gl = evaluate_boundary_target(linear, model);
    for (size_t s = 0; s < linear.boundary_nodes().size(); ++s)
      CHECK((gl.positions.col(Index(s)) - linear.coords().col(linear.boundary_nodes()[s])).norm() < 1e-14);
    CHECK(constraint_norm(linear, gl) < 1e-14);
  }
}

TEST_CASE("constraint norm") {
  const HighOrderMesh mesh = interpolate_to_degree(generate_shell_mesh(1.0, 4.0, 1, 3), 2);
  const GeometryModel model = shell_model(1.0, 4.0, 3);
  const BoundaryTarget g = evaluate_boundary_target(mesh, model);

  BoundaryTarget same{Eigen::MatrixXd(mesh.dim(), mesh.boundary_nodes().size())};
  for (size_t s = 0; s < mesh.boundary_nodes().size(); ++s)
    same.positions.col(Index(s)) = mesh.coords().col(mesh.boundary_nodes()[s]);
  CHECK(constraint_norm(mesh, same) == 0.0);

  const Eigen::Vector3d c(0.3, -0.4, 1.2);
  BoundaryTarget shifted = same;
  shifted.positions.colwise() += c;
  CHECK(constraint_norm(mesh, shifted) == doctest::Approx(c.norm()).epsilon(1e-12));

  const double eps = constraint_norm(mesh, g);
  CHECK(eps > 0.0);
  CHECK(eps == doctest::Approx(constraint_norm_oracle(mesh, g)).epsilon(1e-8));
  CHECK(boundary_error(mesh, g) == doctest::Approx(eps * std::sqrt(mesh.boundary_measure())).epsilon(1e-14));

  const Eigen::Vector3d t(5, -2, 7);
  BoundaryTarget gt = g;
  gt.positions.colwise() += t;
  const HighOrderMesh moved = mesh.with_coords(mesh.coords().colwise() + t);
  CHECK(constraint_norm(moved, gt) == doctest::Approx(eps).epsilon(1e-9));
}

TEST_CASE("periodic targets") {
  const double angle = std::numbers::pi / 6;
  for (int p = 1; p <= 3; ++p) {
    HighOrderMesh mesh = generate_sector_mesh(1.0, 4.0, angle, 1);
    if (p > 1) mesh = interpolate_to_degree(mesh, p);
    std::mt19937_64 rng(53 + p);
    mesh = mesh.with_coords(mesh.coords() + 1e-3 * random_matrix(2, int(mesh.num_nodes()), rng));
    const GeometryModel model = sector_model(1.0, 4.0, angle);
    const BoundaryProjector projector(model, mesh);
    const BoundaryTarget g = projector.evaluate(mesh);
    const auto& pairs = projector.periodic_nodes(0);
    size_t on_cut = 0;
    for (Index n : mesh.boundary_nodes())
      if (std::abs(mesh.reference_coords()(1, n)) < 1e-12) ++on_cut;
    CHECK(pairs.size() == on_cut);
    const PeriodicPair& pp = model.periodic()[0];
    for (const auto& [s, t] : pairs) {
      Eigen::Vector3d xs = Eigen::Vector3d::Zero();
      xs.head<2>() = g.positions.col(s);
      CHECK((pp.apply(xs).head<2>() - g.positions.col(t)).norm() < 1e-12);
    }
  }

  // Cuts that do not match under the rotation.
  const HighOrderMesh mesh = generate_sector_mesh(1.0, 4.0, std::numbers::pi / 6, 1);
  CHECK(category_of([&] { BoundaryProjector(sector_model(1.0, 4.0, std::numbers::pi / 5), mesh); }) ==
        ErrorCategory::PeriodicMatching);
}

TEST_CASE("junction nodes take the lowest-dimensional entity") {
  const HighOrderMesh mesh = generate_sector_mesh(1.0, 4.0, std::numbers::pi / 6, 1);
  const GeometryModel model = sector_model(1.0, 4.0, std::numbers::pi / 6);
  const BoundaryProjector projector(model, mesh);
  // The vertex (1, 0) joins the inner arc and the first cut.
  Index corner = -1;
  for (size_t s = 0; s < mesh.boundary_nodes().size(); ++s)
    if ((mesh.coords().col(mesh.boundary_nodes()[s]) - Eigen::Vector2d(1, 0)).norm() < 1e-12) corner = Index(s);
  REQUIRE(corner >= 0);
  const auto& cls = projector.classification(corner);
  REQUIRE(cls.size() == 1);
  CHECK(model.entities()[cls[0]].type == EntityType::Circle);

  // Box corners meet three planes and project onto their intersection.
  const HighOrderMesh box = generate_box_mesh(1.0, 1, 3);
  Eigen::MatrixXd x = box.coords();
  x.col(0) += Eigen::Vector3d(-0.1, 0.05, 0.02);
  const BoundaryTarget g = evaluate_boundary_target(box.with_coords(x), box_model(1.0, 3));
  CHECK((g.positions.col(box.boundary_slot(0)) - box.coords().col(0)).norm() < 1e-12);
}
