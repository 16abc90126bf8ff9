#include "hocurve/geometry.hpp"

#include "hocurve/error.hpp"
#include "hocurve/generators.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hocurve {

namespace {

using json = nlohmann::json;

Eigen::Vector3d unit(const Eigen::Vector3d& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCategory::Config, std::string(what) + " must be a non-zero vector");
  return v / n;
}

Eigen::Vector3d embed(const Eigen::VectorXd& x) {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  p.head(x.size()) = x;
  return p;
}

// Relative size below which a projection direction is considered undefined.
constexpr double kSingular = 1e-12;

const char* type_name(EntityType t) {
  switch (t) {
    case EntityType::Point: return "point";
    case EntityType::Circle: return "circle";
    case EntityType::Sphere: return "sphere";
    case EntityType::Cylinder: return "cylinder";
    case EntityType::Plane: return "plane";
  }
  return "";
}

Eigen::Vector3d read_vec(const json& rec, const char* key) {
  if (!rec.contains(key)) throw Error(ErrorCategory::Config, std::string("entity field '") + key + "' is missing");
  const auto& a = rec.at(key);
  if (!a.is_array() || a.size() < 2 || a.size() > 3)
    throw Error(ErrorCategory::Config, std::string("entity field '") + key + "' must be an array of 2 or 3 numbers");
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw Error(ErrorCategory::Config, std::string("entity field '") + key + "' must be numeric");
    v(i) = a[i].get<double>();
  }
  return v;
}

double read_radius(const json& rec) {
  if (!rec.contains("radius") || !rec.at("radius").is_number())
    throw Error(ErrorCategory::Config, "entity field 'radius' is missing");
  const double r = rec.at("radius").get<double>();
  if (!(r > 0.0)) throw Error(ErrorCategory::Config, "entity radius must be positive");
  return r;
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

}  // namespace

int Entity::dimension() const {
  switch (type) {
    case EntityType::Point: return 0;
    case EntityType::Circle: return 1;
    default: return 2;
  }
}

Entity Entity::point(const Eigen::Vector3d& p) {
  Entity e;
  e.type = EntityType::Point;
  e.origin = p;
  return e;
}

Entity Entity::circle(const Eigen::Vector3d& center, const Eigen::Vector3d& axis, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCategory::Config, "circle radius must be positive");
  Entity e;
  e.type = EntityType::Circle;
  e.origin = center;
  e.axis = unit(axis, "circle axis");
  e.radius = radius;
  return e;
}

Entity Entity::sphere(const Eigen::Vector3d& center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCategory::Config, "sphere radius must be positive");
  Entity e;
  e.type = EntityType::Sphere;
  e.origin = center;
  e.radius = radius;
  return e;
}

Entity Entity::cylinder(const Eigen::Vector3d& point, const Eigen::Vector3d& axis, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCategory::Config, "cylinder radius must be positive");
  Entity e;
  e.type = EntityType::Cylinder;
  e.origin = point;
  e.axis = unit(axis, "cylinder axis");
  e.radius = radius;
  return e;
}

Entity Entity::plane(const Eigen::Vector3d& point, const Eigen::Vector3d& normal) {
  Entity e;
  e.type = EntityType::Plane;
  e.origin = point;
  e.axis = unit(normal, "plane normal");
  return e;
}

Eigen::Vector3d project(const Entity& entity, const Eigen::Vector3d& x) {
  const Eigen::Vector3d d = x - entity.origin;
  switch (entity.type) {
    case EntityType::Point:
      return entity.origin;
    case EntityType::Plane:
      return x - d.dot(entity.axis) * entity.axis;
    case EntityType::Sphere: {
      const double n = d.norm();
      if (n <= kSingular * entity.radius)
        throw Error(ErrorCategory::Projection, "point at the center of a sphere has no unique projection");
      return entity.origin + (entity.radius / n) * d;
    }
    case EntityType::Cylinder:
    case EntityType::Circle: {
      const double along = d.dot(entity.axis);
      const Eigen::Vector3d radial = d - along * entity.axis;
      const double n = radial.norm();
      if (n <= kSingular * entity.radius)
        throw Error(ErrorCategory::Projection,
                    std::string("point on the axis of a ") + type_name(entity.type) +
                        " has no unique projection");
      Eigen::Vector3d p = entity.origin + (entity.radius / n) * radial;
      if (entity.type == EntityType::Cylinder) p += along * entity.axis;
      return p;
    }
  }
  return x;
}

Eigen::Vector3d PeriodicPair::apply(const Eigen::Vector3d& x) const {
  const Eigen::AngleAxisd rot(angle, axis.normalized());
  return center + rot * (x - center);
}

int GeometryModel::add_entity(Entity entity) {
  entities_.push_back(std::move(entity));
  return int(entities_.size()) - 1;
}

void GeometryModel::set_group(int marker, int entity) {
  if (entity < 0 || entity >= int(entities_.size()))
    throw Error(ErrorCategory::Config, "group " + std::to_string(marker) + " refers to a missing entity");
  groups_[marker] = entity;
}

void GeometryModel::add_periodic(const PeriodicPair& pair) {
  if (pair.source == pair.target)
    throw Error(ErrorCategory::Config, "periodic source and target markers must differ");
  PeriodicPair p = pair;
  p.axis = unit(pair.axis, "periodic axis");
  periodic_.push_back(p);
}

const Entity& GeometryModel::entity_of(int marker) const {
  auto it = groups_.find(marker);
  if (it == groups_.end())
    throw Error(ErrorCategory::Config, "boundary marker " + std::to_string(marker) + " has no geometry group");
  return entities_[it->second];
}

void GeometryModel::validate(const HighOrderMesh& mesh) const {
  std::set<int> seen;
  for (const auto& f : mesh.boundary_faces()) seen.insert(f.marker);
  for (int m : seen) entity_of(m);
  for (const auto& p : periodic_) {
    if (p.source == p.target) throw Error(ErrorCategory::Config, "periodic source and target markers must differ");
    entity_of(p.source);
    entity_of(p.target);
  }
}

GeometryModel GeometryModel::parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::Parse, std::string("geometry config: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entities") || !doc.at("entities").is_array())
    throw Error(ErrorCategory::Config, "geometry config needs an 'entities' array");

  GeometryModel model;
  std::map<std::string, int> by_name;
  for (const auto& rec : doc.at("entities")) {
    if (!rec.is_object() || !rec.contains("type") || !rec.at("type").is_string())
      throw Error(ErrorCategory::Config, "every entity needs a string 'type'");
    const std::string type = rec.at("type").get<std::string>();
    Entity e;
    if (type == "point") e = Entity::point(read_vec(rec, "point"));
    else if (type == "circle") e = Entity::circle(read_vec(rec, "center"), read_vec(rec, "axis"), read_radius(rec));
    else if (type == "sphere") e = Entity::sphere(read_vec(rec, "center"), read_radius(rec));
    else if (type == "cylinder") e = Entity::cylinder(read_vec(rec, "point"), read_vec(rec, "axis"), read_radius(rec));
    else if (type == "plane") e = Entity::plane(read_vec(rec, "point"), read_vec(rec, "normal"));
    else throw Error(ErrorCategory::Config, "unknown entity type '" + type + "'");
    if (rec.contains("name")) {
      e.name = rec.at("name").get<std::string>();
      if (!by_name.emplace(e.name, int(model.entities_.size())).second)
        throw Error(ErrorCategory::Config, "duplicate entity name '" + e.name + "'");
    }
    model.add_entity(std::move(e));
  }

  if (doc.contains("groups")) {
    const auto& groups = doc.at("groups");
    if (!groups.is_object()) throw Error(ErrorCategory::Config, "'groups' must be an object");
    for (const auto& [key, value] : groups.items()) {
      int marker;
      try {
        std::size_t used = 0;
        marker = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw Error(ErrorCategory::Config, "group key '" + key + "' is not an integer marker");
      }
      int id = -1;
      if (value.is_number_integer()) {
        id = value.get<int>();
      } else if (value.is_string()) {
        auto it = by_name.find(value.get<std::string>());
        if (it == by_name.end())
          throw Error(ErrorCategory::Config, "group " + key + " names an unknown entity");
        id = it->second;
      } else {
        throw Error(ErrorCategory::Config, "group " + key + " must be an entity index or name");
      }
      model.set_group(marker, id);
    }
  }

  if (doc.contains("periodic")) {
    const auto& arr = doc.at("periodic");
    if (!arr.is_array()) throw Error(ErrorCategory::Config, "'periodic' must be an array");
    for (const auto& rec : arr) {
      PeriodicPair p;
      try {
        p.source = rec.at("source").get<int>();
        p.target = rec.at("target").get<int>();
        p.angle = rec.at("angle").get<double>();
      } catch (const json::exception&) {
        throw Error(ErrorCategory::Config, "periodic entries need integer 'source', 'target' and numeric 'angle'");
      }
      p.axis = read_vec(rec, "axis");
      if (rec.contains("center")) p.center = read_vec(rec, "center");
      model.add_periodic(p);
    }
  }
  return model;
}

GeometryModel GeometryModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open geometry config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string GeometryModel::to_json() const {
  json doc;
  doc["entities"] = json::array();
  for (const auto& e : entities_) {
    json rec;
    rec["type"] = type_name(e.type);
    if (!e.name.empty()) rec["name"] = e.name;
    switch (e.type) {
      case EntityType::Point: rec["point"] = vec_json(e.origin); break;
      case EntityType::Circle:
        rec["center"] = vec_json(e.origin);
        rec["axis"] = vec_json(e.axis);
        rec["radius"] = e.radius;
        break;
      case EntityType::Sphere:
        rec["center"] = vec_json(e.origin);
        rec["radius"] = e.radius;
        break;
      case EntityType::Cylinder:
        rec["point"] = vec_json(e.origin);
        rec["axis"] = vec_json(e.axis);
        rec["radius"] = e.radius;
        break;
      case EntityType::Plane:
        rec["point"] = vec_json(e.origin);
        rec["normal"] = vec_json(e.axis);
        break;
    }
    doc["entities"].push_back(rec);
  }
  doc["groups"] = json::object();
  for (const auto& [marker, id] : groups_) doc["groups"][std::to_string(marker)] = id;
  doc["periodic"] = json::array();
  for (const auto& p : periodic_)
    doc["periodic"].push_back({{"source", p.source},
                               {"target", p.target},
                               {"center", vec_json(p.center)},
                               {"axis", vec_json(p.axis)},
                               {"angle", p.angle}});
  return doc.dump(2) + "\n";
}

void GeometryModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Io, "cannot write geometry config " + path.string());
  out << to_json();
}

GeometryModel shell_model(double inner_radius, double outer_radius, int dim) {
  GeometryModel model;
  auto make = [&](double r, const char* name) {
    Entity e = dim == 2 ? Entity::circle(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), r)
                        : Entity::sphere(Eigen::Vector3d::Zero(), r);
    e.name = name;
    return model.add_entity(e);
  };
  model.set_group(markers::inner, make(inner_radius, "inner"));
  model.set_group(markers::outer, make(outer_radius, "outer"));
  return model;
}

GeometryModel sector_model(double inner_radius, double outer_radius, double angle) {
  GeometryModel model = shell_model(inner_radius, outer_radius, 2);
  Entity start = Entity::plane(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY());
  start.name = "cut_start";
  Entity end = Entity::plane(Eigen::Vector3d::Zero(),
                             Eigen::Vector3d(-std::sin(angle), std::cos(angle), 0.0));
  end.name = "cut_end";
  model.set_group(markers::cut_source, model.add_entity(start));
  model.set_group(markers::cut_target, model.add_entity(end));
  PeriodicPair p;
  p.source = markers::cut_source;
  p.target = markers::cut_target;
  p.angle = angle;
  model.add_periodic(p);
  return model;
}

GeometryModel box_model(double size, int dim) {
  GeometryModel model;
  for (int axis = 0; axis < dim; ++axis) {
    const Eigen::Vector3d n = Eigen::Vector3d::Unit(axis);
    model.set_group(1 + 2 * axis, model.add_entity(Entity::plane(Eigen::Vector3d::Zero(), n)));
    model.set_group(2 + 2 * axis, model.add_entity(Entity::plane(size * n, n)));
  }
  return model;
}

BoundaryProjector::BoundaryProjector(const GeometryModel& model, const HighOrderMesh& mesh)
    : model_(model) {
  model_.validate(mesh);
  const auto& ref = mesh.reference();
  const auto& bnodes = mesh.boundary_nodes();
  const Index nb = Index(bnodes.size());

  std::vector<std::set<int>> markers_of(nb);
  for (const auto& f : mesh.boundary_faces())
    for (int a : ref.face_nodes(f.local_face))
      markers_of[mesh.boundary_slot(mesh.elements()(a, f.element))].insert(f.marker);

  classes_.resize(nb);
  for (Index s = 0; s < nb; ++s) {
    int best = 3;
    std::vector<int> ids;
    for (int m : markers_of[s]) {
      const int id = model_.groups().at(m);
      const int d = model_.entities()[id].dimension();
      if (d < best) {
        best = d;
        ids.clear();
      }
      if (d == best && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    classes_[s] = std::move(ids);
  }

  const double tol = 1e-6 * mesh.characteristic_length();
  for (const auto& pair : model_.periodic()) {
    std::vector<Index> src, tgt;
    for (Index s = 0; s < nb; ++s) {
      if (markers_of[s].count(pair.source)) src.push_back(s);
      if (markers_of[s].count(pair.target)) tgt.push_back(s);
    }
    std::vector<char> used(src.size(), 0);
    std::vector<std::pair<Index, Index>> matches;
    for (Index t : tgt) {
      const Eigen::Vector3d xt = embed(mesh.reference_coords().col(bnodes[t]));
      Index best = -1;
      double dist = tol;
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double d = (pair.apply(embed(mesh.reference_coords().col(bnodes[src[i]]))) - xt).norm();
        if (d < dist) {
          dist = d;
          best = Index(i);
        }
      }
      if (best < 0 || used[best])
        throw Error(ErrorCategory::PeriodicMatching,
                    "periodic target node " + std::to_string(bnodes[t]) + " has no source partner");
      used[best] = 1;
      matches.emplace_back(src[best], t);
    }
    if (matches.size() != src.size())
      throw Error(ErrorCategory::PeriodicMatching, "periodic source nodes without a target partner");
    matches_.push_back(std::move(matches));
  }
}

BoundaryTarget BoundaryProjector::evaluate(const HighOrderMesh& mesh) const {
  const int dim = mesh.dim();
  const auto& bnodes = mesh.boundary_nodes();
  const Index nb = Index(bnodes.size());
  const double scale = mesh.characteristic_length();
  BoundaryTarget out;
  out.positions.resize(dim, nb);
  for (Index s = 0; s < nb; ++s) {
    Eigen::Vector3d x = embed(mesh.coords().col(bnodes[s]));
    const auto& ids = classes_[s];
    if (ids.size() == 1) {
      x = project(model_.entities()[ids[0]], x);
    } else {
      // Nodes on a junction of groups of equal dimension go to the
      // intersection, found by alternating projections.
      for (int round = 0; round < 200; ++round) {
        const Eigen::Vector3d start = x;
        for (int id : ids) x = project(model_.entities()[id], x);
        if ((x - start).norm() <= 1e-15 * scale) break;
      }
    }
    out.positions.col(s) = x.head(dim);
  }
  for (std::size_t i = 0; i < matches_.size(); ++i) {
    const auto& pair = model_.periodic()[i];
    for (const auto& [src, tgt] : matches_[i])
      out.positions.col(tgt) = pair.apply(embed(out.positions.col(src))).head(dim);
  }
  return out;
}

BoundaryTarget evaluate_boundary_target(const HighOrderMesh& mesh, const GeometryModel& model) {
  return BoundaryProjector(model, mesh).evaluate(mesh);
}

double boundary_error(const HighOrderMesh& mesh, const BoundaryTarget& target) {
  const auto& bnodes = mesh.boundary_nodes();
  const auto& M = mesh.boundary_mass();
  double sum = 0.0;
  for (int k = 0; k < mesh.dim(); ++k) {
    Eigen::VectorXd d(Index(bnodes.size()));
    for (Index s = 0; s < d.size(); ++s) d(s) = mesh.coords()(k, bnodes[s]) - target.positions(k, s);
    sum += d.dot(M * d);
  }
  return std::sqrt(std::max(sum, 0.0));
}

double constraint_norm(const HighOrderMesh& mesh, const BoundaryTarget& target) {
  return boundary_error(mesh, target) / std::sqrt(mesh.boundary_measure());
}

}  // namespace hocurve
