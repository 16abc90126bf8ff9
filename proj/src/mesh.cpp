#include "hocurve/mesh.hpp"

#include "hocurve/error.hpp"
#include "hocurve/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

namespace hocurve {

struct MeshTopology {
  int dim = 0;
  int degree = 0;
  std::shared_ptr<const ReferenceElement> ref;
  Eigen::MatrixXd reference_coords;
  IndexMatrix elements;
  std::vector<BoundaryFace> faces;
  std::vector<Index> boundary_nodes;
  std::vector<Index> boundary_slot;
  Eigen::MatrixXd linv;   // dim x (dim * ne)
  Eigen::VectorXd ldet;   // |det J_lin|
  Eigen::SparseMatrix<double> mass;
  double volume = 0.0;
  double boundary_measure = 0.0;
  double length = 0.0;
};

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

std::vector<Index> sorted_face_key(const IndexMatrix& elements, const ReferenceElement& ref,
                                   Index e, int f) {
  std::vector<Index> key;
  for (int v : ref.face_vertices(f)) key.push_back(elements(ref.vertex_node(v), e));
  std::sort(key.begin(), key.end());
  return key;
}

struct VectorHash {
  size_t operator()(const std::vector<Index>& v) const {
    size_t h = 1469598103934665603ull;
    for (Index x : v) h = (h ^ static_cast<size_t>(x)) * 1099511628211ull;
    return h;
  }
};

void finalize_topology(MeshTopology& t) {
  const auto& ref = *t.ref;
  const int dim = t.dim;
  const Index ne = t.elements.cols();

  t.linv.resize(dim, dim * ne);
  t.ldet.resize(ne);
  for (Index e = 0; e < ne; ++e) {
    Eigen::MatrixXd J(dim, dim);
    const Eigen::VectorXd x0 = t.reference_coords.col(t.elements(ref.vertex_node(0), e));
    for (int d = 0; d < dim; ++d)
      J.col(d) = t.reference_coords.col(t.elements(ref.vertex_node(d + 1), e)) - x0;
    const double det = J.determinant();
    double scale = 1.0;
    for (int d = 0; d < dim; ++d) scale *= J.col(d).norm();
    if (!(det > 1e-14 * scale))
      throw Error(ErrorCategory::DegenerateReference,
                  "element " + std::to_string(e) + " of the reference mesh is degenerate or inverted");
    t.linv.middleCols(dim * e, dim) = J.inverse();
    t.ldet(e) = det;
  }
  t.volume = t.ldet.sum() / factorial(dim);

  // Boundary faces must not be shared with a second element.
  std::unordered_map<std::vector<Index>, int, VectorHash> face_count;
  for (Index e = 0; e < ne; ++e)
    for (int f = 0; f <= dim; ++f) ++face_count[sorted_face_key(t.elements, ref, e, f)];
  std::vector<char> is_bnode(t.reference_coords.cols(), 0);
  for (const auto& bf : t.faces) {
    if (bf.element < 0 || bf.element >= ne || bf.local_face < 0 || bf.local_face > dim)
      throw Error(ErrorCategory::Parameter, "boundary face refers to an invalid element face");
    if (face_count[sorted_face_key(t.elements, ref, bf.element, bf.local_face)] != 1)
      throw Error(ErrorCategory::Parameter, "boundary face is shared by two elements");
    for (int a : ref.face_nodes(bf.local_face)) is_bnode[t.elements(a, bf.element)] = 1;
  }
  t.boundary_slot.assign(t.reference_coords.cols(), -1);
  for (Index n = 0; n < Index(is_bnode.size()); ++n)
    if (is_bnode[n]) {
      t.boundary_slot[n] = Index(t.boundary_nodes.size());
      t.boundary_nodes.push_back(n);
    }

  // Boundary mass on the linear faces.
  const auto face_ref = ReferenceElement::get(dim - 1 == 0 ? 1 : dim - 1, t.degree);
  const auto& rule = cached_simplex_rule(dim - 1, 2 * t.degree);
  const int nf = int(ref.face_nodes(0).size());
  Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nf, nf);
  for (Index q = 0; q < rule.size(); ++q) {
    const Eigen::VectorXd N = face_ref->shape(rule.points.col(q));
    local.noalias() += rule.weights(q) * N * N.transpose();
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(t.faces.size() * nf * nf);
  t.boundary_measure = 0.0;
  for (const auto& bf : t.faces) {
    const auto& fv = ref.face_vertices(bf.local_face);
    const auto& fn = ref.face_nodes(bf.local_face);
    auto vx = [&](int k) -> Eigen::Vector3d {
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      p.head(dim) = t.reference_coords.col(t.elements(ref.vertex_node(fv[k]), bf.element));
      return p;
    };
    double jac;
    if (dim == 2) {
      jac = (vx(1) - vx(0)).norm();
    } else {
      jac = (vx(1) - vx(0)).cross(vx(2) - vx(0)).norm();
    }
    t.boundary_measure += jac / factorial(dim - 1);
    for (int a = 0; a < nf; ++a)
      for (int b = 0; b < nf; ++b)
        trip.emplace_back(t.boundary_slot[t.elements(fn[a], bf.element)],
                          t.boundary_slot[t.elements(fn[b], bf.element)], jac * local(a, b));
  }
  const Index nb = Index(t.boundary_nodes.size());
  t.mass.resize(nb, nb);
  t.mass.setFromTriplets(trip.begin(), trip.end());

  // The characteristic length follows the vertices of the reference mesh.
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (Index e = 0; e < ne; ++e)
    for (int v = 0; v <= dim; ++v) {
      const auto x = t.reference_coords.col(t.elements(ref.vertex_node(v), e));
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
  t.length = ne > 0 ? (hi - lo).norm() : 0.0;
}

}  // namespace

HighOrderMesh HighOrderMesh::from_linear(const Eigen::MatrixXd& vertices,
                                         const IndexMatrix& simplices,
                                         const std::vector<LinearFace>& faces) {
  const int dim = int(vertices.rows());
  if (dim < 2 || dim > 3) throw Error(ErrorCategory::Parameter, "mesh dimension must be 2 or 3");
  if (simplices.rows() != dim + 1)
    throw Error(ErrorCategory::Parameter, "simplex connectivity has the wrong number of rows");
  auto ref = ReferenceElement::get(dim, 1);

  // Degree-1 lattice ordering coincides with vertex ordering.
  std::unordered_map<std::vector<Index>, std::pair<Index, int>, VectorHash> face_owner;
  for (Index e = 0; e < simplices.cols(); ++e)
    for (int f = 0; f <= dim; ++f) {
      auto key = sorted_face_key(simplices, *ref, e, f);
      face_owner.emplace(std::move(key), std::make_pair(e, f));
    }
  std::vector<BoundaryFace> bfaces;
  bfaces.reserve(faces.size());
  for (const auto& lf : faces) {
    auto key = lf.vertices;
    std::sort(key.begin(), key.end());
    auto it = face_owner.find(key);
    if (it == face_owner.end() || Index(key.size()) != dim)
      throw Error(ErrorCategory::Parameter, "boundary face is not a face of any element");
    bfaces.push_back({it->second.first, it->second.second, lf.marker});
  }
  return from_nodes(1, vertices, vertices, simplices, std::move(bfaces));
}

HighOrderMesh HighOrderMesh::from_nodes(int degree, const Eigen::MatrixXd& coords,
                                        const Eigen::MatrixXd& reference_coords,
                                        const IndexMatrix& elements,
                                        std::vector<BoundaryFace> faces) {
  auto t = std::make_shared<MeshTopology>();
  t->dim = int(coords.rows());
  t->degree = degree;
  if (t->dim < 2 || t->dim > 3) throw Error(ErrorCategory::Parameter, "mesh dimension must be 2 or 3");
  t->ref = ReferenceElement::get(t->dim, degree);
  if (elements.rows() != t->ref->num_nodes())
    throw Error(ErrorCategory::Parameter, "element connectivity does not match the degree");
  if (reference_coords.rows() != coords.rows() || reference_coords.cols() != coords.cols())
    throw Error(ErrorCategory::Parameter, "reference coordinates do not match coordinates");
  if (elements.size() > 0 && (elements.minCoeff() < 0 || elements.maxCoeff() >= coords.cols()))
    throw Error(ErrorCategory::Parameter, "element connectivity refers to missing nodes");
  t->reference_coords = reference_coords;
  t->elements = elements;
  t->faces = std::move(faces);
  finalize_topology(*t);
  HighOrderMesh m;
  m.topo_ = std::move(t);
  m.coords_ = coords;
  return m;
}

int HighOrderMesh::dim() const { return topo_->dim; }
int HighOrderMesh::degree() const { return topo_->degree; }
Index HighOrderMesh::num_elements() const { return topo_->elements.cols(); }
const ReferenceElement& HighOrderMesh::reference() const { return *topo_->ref; }
const Eigen::MatrixXd& HighOrderMesh::reference_coords() const { return topo_->reference_coords; }
const IndexMatrix& HighOrderMesh::elements() const { return topo_->elements; }
const std::vector<BoundaryFace>& HighOrderMesh::boundary_faces() const { return topo_->faces; }
const std::vector<Index>& HighOrderMesh::boundary_nodes() const { return topo_->boundary_nodes; }
Index HighOrderMesh::boundary_slot(Index node) const { return topo_->boundary_slot[node]; }

Eigen::Map<const Eigen::MatrixXd> HighOrderMesh::linear_jacobian_inverse(Index e) const {
  const int d = topo_->dim;
  return Eigen::Map<const Eigen::MatrixXd>(topo_->linv.data() + e * d * d, d, d);
}

double HighOrderMesh::linear_jacobian_det(Index e) const { return topo_->ldet(e); }
const Eigen::SparseMatrix<double>& HighOrderMesh::boundary_mass() const { return topo_->mass; }
double HighOrderMesh::volume() const { return topo_->volume; }
double HighOrderMesh::boundary_measure() const { return topo_->boundary_measure; }
double HighOrderMesh::characteristic_length() const { return topo_->length; }

HighOrderMesh HighOrderMesh::with_coords(Eigen::MatrixXd coords) const {
  if (coords.rows() != coords_.rows() || coords.cols() != coords_.cols())
    throw Error(ErrorCategory::Parameter, "with_coords: shape mismatch");
  HighOrderMesh m;
  m.topo_ = topo_;
  m.coords_ = std::move(coords);
  return m;
}

Eigen::MatrixXd HighOrderMesh::element_coords(Index e) const {
  const auto& conn = topo_->elements;
  Eigen::MatrixXd X(conn.rows(), dim());
  for (Index a = 0; a < conn.rows(); ++a) X.row(a) = coords_.col(conn(a, e)).transpose();
  return X;
}

MapEvaluation evaluate_map(const HighOrderMesh& mesh, Index elem,
                           const Eigen::Ref<const Eigen::VectorXd>& xi) {
  if (elem < 0 || elem >= mesh.num_elements())
    throw Error(ErrorCategory::Parameter, "evaluate_map: element index out of range");
  const auto& ref = mesh.reference();
  const Eigen::MatrixXd X = mesh.element_coords(elem);
  MapEvaluation out;
  out.x = X.transpose() * ref.shape(xi);
  out.jacobian = X.transpose() * ref.shape_gradients(xi) * mesh.linear_jacobian_inverse(elem);
  return out;
}

HighOrderMesh interpolate_to_degree(const HighOrderMesh& mesh, int p_new) {
  const int p = mesh.degree();
  if (p_new <= p || p_new > 4)
    throw Error(ErrorCategory::Parameter, "interpolate_to_degree: target degree must exceed the current one and be <= 4");
  const int dim = mesh.dim();
  const auto& old_ref = mesh.reference();
  const auto new_ref = ReferenceElement::get(dim, p_new);
  const int nn = new_ref->num_nodes();

  // Old basis sampled at the new lattice (rows: new nodes).
  Eigen::MatrixXd S(nn, old_ref.num_nodes());
  for (int a = 0; a < nn; ++a) S.row(a) = old_ref.shape(new_ref->nodes().col(a)).transpose();

  const Index ne = mesh.num_elements();
  IndexMatrix conn(nn, ne);
  std::map<std::vector<Index>, Index> keys;
  std::vector<std::pair<Index, int>> source;  // (element, local node) defining each new node
  for (Index e = 0; e < ne; ++e) {
    for (int a = 0; a < nn; ++a) {
      const auto& alpha = new_ref->multi_index(a);
      std::vector<Index> key;
      std::vector<std::pair<Index, int>> parts;
      for (int k = 0; k <= dim; ++k)
        if (alpha[k] > 0) parts.emplace_back(mesh.elements()(old_ref.vertex_node(k), e), alpha[k]);
      std::sort(parts.begin(), parts.end());
      for (const auto& [v, w] : parts) {
        key.push_back(v);
        key.push_back(w);
      }
      auto [it, inserted] = keys.emplace(std::move(key), Index(source.size()));
      if (inserted) source.emplace_back(e, a);
      conn(a, e) = it->second;
    }
  }
  const Index n_new = Index(source.size());
  Eigen::MatrixXd coords(dim, n_new), refc(dim, n_new);
  for (Index n = 0; n < n_new; ++n) {
    const auto [e, a] = source[n];
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim), r = Eigen::VectorXd::Zero(dim);
    for (Index b = 0; b < old_ref.num_nodes(); ++b) {
      const Index g = mesh.elements()(b, e);
      x += S(a, b) * mesh.coords().col(g);
      r += S(a, b) * mesh.reference_coords().col(g);
    }
    coords.col(n) = x;
    refc.col(n) = r;
  }
  return HighOrderMesh::from_nodes(p_new, coords, refc, conn, mesh.boundary_faces());
}

}  // namespace hocurve
