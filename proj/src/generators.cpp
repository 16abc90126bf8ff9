#include "hocurve/generators.hpp"

#include "hocurve/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace hocurve {

namespace {

void check_radii(double ri, double ro, int refinement) {
  if (!(ri > 0.0) || !(ro > ri) || !std::isfinite(ro))
    throw Error(ErrorCategory::Parameter, "radii must satisfy 0 < inner < outer");
  if (refinement < 1 || refinement > 6)
    throw Error(ErrorCategory::Parameter, "refinement level must be in 1..6");
}

// Orders simplex columns so every element has positive volume.
void orient(const Eigen::MatrixXd& v, IndexMatrix& s) {
  const int dim = int(v.rows());
  for (Index e = 0; e < s.cols(); ++e) {
    Eigen::MatrixXd J(dim, dim);
    for (int d = 0; d < dim; ++d) J.col(d) = v.col(s(d + 1, e)) - v.col(s(0, e));
    if (J.determinant() < 0.0) std::swap(s(0, e), s(1, e));
  }
}

// Radial layers graded so that cells stay close to isotropic.
std::vector<double> radial_layers(double ri, double ro, int layers) {
  std::vector<double> r(layers + 1);
  for (int l = 0; l <= layers; ++l) r[l] = ri * std::pow(ro / ri, double(l) / layers);
  r.front() = ri;
  r.back() = ro;
  return r;
}

HighOrderMesh polar_mesh(double ri, double ro, double angle, bool closed, int n_theta,
                         int layers, const GeneratorOptions& options) {
  const auto radii = radial_layers(ri, ro, layers);
  const int cols = closed ? n_theta : n_theta + 1;
  Eigen::MatrixXd v(2, cols * (layers + 1));
  auto vid = [&](int i, int l) -> Index { return Index(l) * cols + (i % cols); };
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int l = 0; l <= layers; ++l)
    for (int i = 0; i < cols; ++i) {
      double r = radii[l];
      double t = angle * i / n_theta;
      if (options.jitter > 0.0 && l > 0 && l < layers && (closed || (i > 0 && i < n_theta))) {
        const double dr = std::min(radii[l + 1] - r, r - radii[l - 1]);
        r += options.jitter * dr * uni(rng);
        t += options.jitter * (angle / n_theta) * uni(rng) * 0.5;
      }
      v.col(vid(i, l)) << r * std::cos(t), r * std::sin(t);
    }
  IndexMatrix s(3, 2 * n_theta * layers);
  Index e = 0;
  for (int l = 0; l < layers; ++l)
    for (int i = 0; i < n_theta; ++i) {
      const Index a = vid(i, l), b = vid(i + 1, l), c = vid(i + 1, l + 1), d = vid(i, l + 1);
      if ((i + l) % 2 == 0) {
        s.col(e++) << a, b, c;
        s.col(e++) << a, c, d;
      } else {
        s.col(e++) << a, b, d;
        s.col(e++) << b, c, d;
      }
    }
  orient(v, s);
  std::vector<LinearFace> faces;
  for (int i = 0; i < n_theta; ++i) {
    faces.push_back({{vid(i, 0), vid(i + 1, 0)}, markers::inner});
    faces.push_back({{vid(i, layers), vid(i + 1, layers)}, markers::outer});
  }
  if (!closed)
    for (int l = 0; l < layers; ++l) {
      faces.push_back({{vid(0, l), vid(0, l + 1)}, markers::cut_source});
      faces.push_back({{vid(n_theta, l), vid(n_theta, l + 1)}, markers::cut_target});
    }
  return HighOrderMesh::from_linear(v, s, faces);
}

struct SphereTriangulation {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<Index, 3>> faces;
};

SphereTriangulation icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  SphereTriangulation s;
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (const auto& p : raw) s.vertices.push_back(Eigen::Vector3d(p[0], p[1], p[2]).normalized());
  s.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<Index, Index>, Index> mid;
    auto midpoint = [&](Index a, Index b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      s.vertices.push_back((s.vertices[a] + s.vertices[b]).normalized());
      const Index id = Index(s.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<Index, 3>> next;
    for (const auto& f : s.faces) {
      const Index ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    s.faces = std::move(next);
  }
  return s;
}

// Splits a prism (bottom a0 a1 a2, top b0 b1 b2) into three tetrahedra whose
// quad-face diagonals pass through the smallest global vertex id, so that
// neighbouring prisms stay conforming.
void split_prism(std::array<Index, 6> v, std::vector<std::array<Index, 4>>& out) {
  int imin = int(std::min_element(v.begin(), v.end()) - v.begin());
  if (imin >= 3) {  // flip top and bottom
    std::swap(v[0], v[3]);
    std::swap(v[1], v[4]);
    std::swap(v[2], v[5]);
    imin -= 3;
  }
  // Rotate so the minimum sits at position 0.
  std::array<Index, 6> r;
  for (int k = 0; k < 3; ++k) {
    r[k] = v[(imin + k) % 3];
    r[k + 3] = v[3 + (imin + k) % 3];
  }
  if (std::min(r[1], r[5]) < std::min(r[2], r[4])) {
    out.push_back({r[0], r[1], r[2], r[5]});
    out.push_back({r[0], r[1], r[5], r[4]});
    out.push_back({r[0], r[4], r[5], r[3]});
  } else {
    out.push_back({r[0], r[1], r[2], r[4]});
    out.push_back({r[0], r[4], r[2], r[5]});
    out.push_back({r[0], r[4], r[5], r[3]});
  }
}

}  // namespace

HighOrderMesh generate_shell_mesh(double ri, double ro, int refinement, int dim,
                                  const GeneratorOptions& options) {
  check_radii(ri, ro, refinement);
  if (dim == 2) {
    const int scale = 1 << (refinement - 1);
    return polar_mesh(ri, ro, 2.0 * std::numbers::pi, true, 32 * scale, 8 * scale, options);
  }
  if (dim != 3) throw Error(ErrorCategory::Parameter, "shell mesh dimension must be 2 or 3");

  const auto sphere = icosphere(refinement);
  const int layers = 3 * (1 << (refinement - 1));
  const auto radii = radial_layers(ri, ro, layers);
  const Index nv = Index(sphere.vertices.size());
  Eigen::MatrixXd v(3, nv * (layers + 1));
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int l = 0; l <= layers; ++l)
    for (Index i = 0; i < nv; ++i) {
      double r = radii[l];
      if (options.jitter > 0.0 && l > 0 && l < layers) {
        const double dr = std::min(radii[l + 1] - r, r - radii[l - 1]);
        r += options.jitter * dr * uni(rng);
      }
      v.col(l * nv + i) = r * sphere.vertices[i];
    }
  std::vector<std::array<Index, 4>> tets;
  for (int l = 0; l < layers; ++l)
    for (const auto& f : sphere.faces)
      split_prism({l * nv + f[0], l * nv + f[1], l * nv + f[2], (l + 1) * nv + f[0],
                   (l + 1) * nv + f[1], (l + 1) * nv + f[2]},
                  tets);
  IndexMatrix s(4, Index(tets.size()));
  for (Index e = 0; e < s.cols(); ++e)
    for (int k = 0; k < 4; ++k) s(k, e) = tets[e][k];
  orient(v, s);
  std::vector<LinearFace> faces;
  for (const auto& f : sphere.faces) {
    faces.push_back({{f[0], f[1], f[2]}, markers::inner});
    faces.push_back({{layers * nv + f[0], layers * nv + f[1], layers * nv + f[2]}, markers::outer});
  }
  return HighOrderMesh::from_linear(v, s, faces);
}

HighOrderMesh generate_sector_mesh(double ri, double ro, double angle, int refinement,
                                   const GeneratorOptions& options) {
  check_radii(ri, ro, refinement);
  if (!(angle > 0.0) || !(angle < std::numbers::pi))
    throw Error(ErrorCategory::Parameter, "sector angle must be in (0, pi)");
  const int scale = 1 << (refinement - 1);
  const int n_theta = std::max(3, int(std::ceil(32.0 * scale * angle / (2.0 * std::numbers::pi))));
  return polar_mesh(ri, ro, angle, false, n_theta, 8 * scale, options);
}

HighOrderMesh generate_box_mesh(double size, int n, int dim) {
  if (!(size > 0.0) || n < 1) throw Error(ErrorCategory::Parameter, "box size and resolution must be positive");
  if (dim == 2) {
    Eigen::MatrixXd v(2, (n + 1) * (n + 1));
    auto id = [&](int i, int j) -> Index { return Index(j) * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) v.col(id(i, j)) << size * i / n, size * j / n;
    IndexMatrix s(3, 2 * n * n);
    Index e = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        s.col(e++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
        s.col(e++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
      }
    orient(v, s);
    std::vector<LinearFace> faces;
    for (int i = 0; i < n; ++i) {
      faces.push_back({{id(0, i), id(0, i + 1)}, 1});
      faces.push_back({{id(n, i), id(n, i + 1)}, 2});
      faces.push_back({{id(i, 0), id(i + 1, 0)}, 3});
      faces.push_back({{id(i, n), id(i + 1, n)}, 4});
    }
    return HighOrderMesh::from_linear(v, s, faces);
  }
  if (dim != 3) throw Error(ErrorCategory::Parameter, "box mesh dimension must be 2 or 3");
  const int m = n + 1;
  Eigen::MatrixXd v(3, m * m * m);
  auto id = [&](int i, int j, int k) -> Index { return (Index(k) * m + j) * m + i; };
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) v.col(id(i, j, k)) << size * i / n, size * j / n, size * k / n;
  // Kuhn split of every cube: paths from (0,0,0) to (1,1,1).
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  IndexMatrix s(4, 6 * n * n * n);
  Index e = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          int c[3] = {i, j, k};
          s(0, e) = id(c[0], c[1], c[2]);
          for (int step = 0; step < 3; ++step) {
            ++c[p[step]];
            s(step + 1, e) = id(c[0], c[1], c[2]);
          }
          ++e;
        }
  orient(v, s);
  std::vector<LinearFace> faces;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      // Two triangles per boundary square, split along the Kuhn diagonal.
      auto add = [&](Index p00, Index p10, Index p11, Index p01, int marker) {
        faces.push_back({{p00, p10, p11}, marker});
        faces.push_back({{p00, p11, p01}, marker});
      };
      add(id(0, a, b), id(0, a + 1, b), id(0, a + 1, b + 1), id(0, a, b + 1), 1);
      add(id(n, a, b), id(n, a + 1, b), id(n, a + 1, b + 1), id(n, a, b + 1), 2);
      add(id(a, 0, b), id(a + 1, 0, b), id(a + 1, 0, b + 1), id(a, 0, b + 1), 3);
      add(id(a, n, b), id(a + 1, n, b), id(a + 1, n, b + 1), id(a, n, b + 1), 4);
      add(id(a, b, 0), id(a + 1, b, 0), id(a + 1, b + 1, 0), id(a, b + 1, 0), 5);
      add(id(a, b, n), id(a + 1, b, n), id(a + 1, b + 1, n), id(a, b + 1, n), 6);
    }
  return HighOrderMesh::from_linear(v, s, faces);
}

}  // namespace hocurve
