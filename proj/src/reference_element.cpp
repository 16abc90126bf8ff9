#include "hocurve/reference_element.hpp"

#include "hocurve/error.hpp"

#include <map>
#include <mutex>

namespace hocurve {

int lattice_size(int dim, int degree) {
  int n = 1;
  for (int k = 1; k <= dim; ++k) n = n * (degree + k) / k;
  return n;
}

std::vector<MultiIndex> lattice_indices(int dim, int p) {
  std::vector<MultiIndex> out;
  out.reserve(lattice_size(dim, p));
  const int kmax = dim >= 3 ? p : 0;
  const int jmax = dim >= 2 ? p : 0;
  for (int k = 0; k <= kmax; ++k)
    for (int j = 0; j <= jmax - k; ++j)
      for (int i = 0; i <= p - j - k; ++i) out.push_back({p - i - j - k, i, j, k});
  return out;
}

namespace {

// Oriented faces (by opposite vertex) with outward normals.
const std::vector<std::vector<int>>& oriented_faces(int dim) {
  static const std::vector<std::vector<int>> seg = {{1}, {0}};
  static const std::vector<std::vector<int>> tri = {{1, 2}, {2, 0}, {0, 1}};
  static const std::vector<std::vector<int>> tet = {
      {1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  return dim == 1 ? seg : dim == 2 ? tri : tet;
}

// l_a(t) = prod_{m<a} (p t - m)/(m + 1) and its derivative.
inline void lattice_factor(int a, int p, double t, double& val, double& der) {
  val = 1.0;
  der = 0.0;
  for (int m = 0; m < a; ++m) {
    const double f = (p * t - m) / (m + 1.0);
    const double df = p / (m + 1.0);
    der = der * f + val * df;
    val *= f;
  }
}

}  // namespace

ReferenceElement::ReferenceElement(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > 3) throw Error(ErrorCategory::Parameter, "reference element dim must be 1..3");
  if (degree < 1 || degree > 4) throw Error(ErrorCategory::Unsupported, "supported degrees are 1..4");
  indices_ = lattice_indices(dim, degree);
  nodes_.resize(dim, num_nodes());
  for (int a = 0; a < num_nodes(); ++a)
    for (int d = 0; d < dim; ++d) nodes_(d, a) = double(indices_[a][d + 1]) / degree;

  vertex_nodes_.resize(dim + 1);
  for (int v = 0; v <= dim; ++v) {
    MultiIndex alpha{0, 0, 0, 0};
    alpha[v] = degree;
    vertex_nodes_[v] = node_of(alpha);
  }

  face_vertices_ = oriented_faces(dim);
  face_nodes_.resize(dim + 1);
  for (int f = 0; f <= dim; ++f) {
    const auto& fv = face_vertices_[f];
    if (dim == 1) {
      face_nodes_[f] = {vertex_nodes_[fv[0]]};
      continue;
    }
    for (const auto& beta : lattice_indices(dim - 1, degree)) {
      MultiIndex alpha{0, 0, 0, 0};
      for (int k = 0; k < dim; ++k) alpha[fv[k]] = beta[k];
      face_nodes_[f].push_back(node_of(alpha));
    }
  }
}

int ReferenceElement::node_of(const MultiIndex& alpha) const {
  int s = 0;
  for (int k = 0; k <= dim_; ++k) {
    if (alpha[k] < 0) return -1;
    s += alpha[k];
  }
  if (s != degree_) return -1;
  // Inverse of lattice_indices' enumeration.
  const int p = degree_;
  const int i = alpha[1];
  const int j = dim_ >= 2 ? alpha[2] : 0;
  const int k = dim_ >= 3 ? alpha[3] : 0;
  int offset = 0;
  for (int kk = 0; kk < k; ++kk) offset += lattice_size(2, p - kk);
  for (int jj = 0; jj < j; ++jj) offset += p - k - jj + 1;
  return offset + i;
}

Eigen::VectorXd ReferenceElement::shape(const Eigen::Ref<const Eigen::VectorXd>& xi) const {
  double lambda[4] = {1.0, 0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    lambda[d + 1] = xi(d);
    lambda[0] -= xi(d);
  }
  Eigen::VectorXd N(num_nodes());
  for (int a = 0; a < num_nodes(); ++a) {
    double v = 1.0;
    for (int k = 0; k <= dim_; ++k) {
      double f, df;
      lattice_factor(indices_[a][k], degree_, lambda[k], f, df);
      v *= f;
    }
    N(a) = v;
  }
  return N;
}

Eigen::MatrixXd ReferenceElement::shape_gradients(const Eigen::Ref<const Eigen::VectorXd>& xi) const {
  double lambda[4] = {1.0, 0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    lambda[d + 1] = xi(d);
    lambda[0] -= xi(d);
  }
  Eigen::MatrixXd G(num_nodes(), dim_);
  for (int a = 0; a < num_nodes(); ++a) {
    double f[4], df[4];
    for (int k = 0; k <= dim_; ++k) lattice_factor(indices_[a][k], degree_, lambda[k], f[k], df[k]);
    // dN/dlambda_k
    double dl[4];
    for (int k = 0; k <= dim_; ++k) {
      double prod = df[k];
      for (int m = 0; m <= dim_; ++m)
        if (m != k) prod *= f[m];
      dl[k] = prod;
    }
    for (int d = 0; d < dim_; ++d) G(a, d) = dl[d + 1] - dl[0];
  }
  return G;
}

std::shared_ptr<const ReferenceElement> ReferenceElement::get(int dim, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const ReferenceElement>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, degree}];
  if (!slot) slot = std::make_shared<ReferenceElement>(dim, degree);
  return slot;
}

}  // namespace hocurve
