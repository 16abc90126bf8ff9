#include "hocurve/mesh_io.hpp"

#include "hocurve/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <unordered_map>

namespace hocurve {

namespace {

// Gmsh reference-node lattice coordinates (xi * p), as reported by
// gmsh::model::mesh::getElementProperties. Lines use Gmsh's [-1, 1] segment
// and are stored here already shifted to [0, p].
const std::vector<std::vector<std::array<int, 3>>>& gmsh_tables(int dim) {
  static const std::vector<std::vector<std::array<int, 3>>> lines = {
      {{0}, {1}},
      {{0}, {2}, {1}},
      {{0}, {3}, {1}, {2}},
      {{0}, {4}, {1}, {2}, {3}},
  };
  static const std::vector<std::vector<std::array<int, 3>>> triangles = {
      {{0, 0}, {1, 0}, {0, 1}},
      {{0, 0}, {2, 0}, {0, 2}, {1, 0}, {1, 1}, {0, 1}},
      {{0, 0}, {3, 0}, {0, 3}, {1, 0}, {2, 0}, {2, 1}, {1, 2}, {0, 2}, {0, 1}, {1, 1}},
      {{0, 0}, {4, 0}, {0, 4}, {1, 0}, {2, 0}, {3, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 3},
       {0, 2}, {0, 1}, {1, 1}, {2, 1}, {1, 2}},
  };
  static const std::vector<std::vector<std::array<int, 3>>> tets = {
      {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
      {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1},
       {0, 1, 1}, {1, 0, 1}},
      {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {1, 0, 0}, {2, 0, 0}, {2, 1, 0},
       {1, 2, 0}, {0, 2, 0}, {0, 1, 0}, {0, 0, 2}, {0, 0, 1}, {0, 1, 2}, {0, 2, 1},
       {1, 0, 2}, {2, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}},
      {{0, 0, 0}, {4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0},
       {3, 1, 0}, {2, 2, 0}, {1, 3, 0}, {0, 3, 0}, {0, 2, 0}, {0, 1, 0}, {0, 0, 3},
       {0, 0, 2}, {0, 0, 1}, {0, 1, 3}, {0, 2, 2}, {0, 3, 1}, {1, 0, 3}, {2, 0, 2},
       {3, 0, 1}, {1, 1, 0}, {1, 2, 0}, {2, 1, 0}, {1, 0, 1}, {2, 0, 1}, {1, 0, 2},
       {0, 1, 1}, {0, 1, 2}, {0, 2, 1}, {1, 1, 2}, {2, 1, 1}, {1, 2, 1}, {1, 1, 1}},
  };
  return dim == 1 ? lines : dim == 2 ? triangles : tets;
}

struct ElementKind {
  int dim = 0;
  int degree = 0;
};

std::optional<ElementKind> kind_of(int type) {
  for (int dim = 1; dim <= 3; ++dim)
    for (int p = 1; p <= 4; ++p)
      if (gmsh_element_type(dim, p) == type) return ElementKind{dim, p};
  return std::nullopt;
}

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path), path_(path.string()) {
    if (!in_) throw Error(ErrorCategory::Io, "cannot open " + path_);
  }

  bool next_line(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::string line() {
    std::string s;
    if (!next_line(s)) fail("unexpected end of file");
    return s;
  }

  std::istringstream tokens() { return std::istringstream(line()); }

  template <class... T>
  void parse(std::istringstream& ss, T&... values) {
    ((ss >> values), ...);
    if (ss.fail()) fail("malformed line");
  }

  [[noreturn]] void fail(const std::string& what, ErrorCategory c = ErrorCategory::Parse) const {
    throw Error(c, path_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  void expect(const std::string& tag) {
    const std::string s = line();
    if (s.rfind(tag, 0) != 0) fail("expected " + tag);
  }

  int line_no() const { return line_no_; }

 private:
  std::ifstream in_;
  std::string path_;
  int line_no_ = 0;
};

struct ElementBlock {
  int dim;
  int tag;
  int type;
  std::vector<std::vector<long long>> nodes;
  int line;
};

}  // namespace

int gmsh_element_type(int dim, int degree) {
  static const int lines[] = {1, 8, 26, 27};
  static const int tris[] = {2, 9, 21, 23};
  static const int tets[] = {4, 11, 29, 30};
  if (degree < 1 || degree > 4 || dim < 1 || dim > 3)
    throw Error(ErrorCategory::Unsupported, "no Gmsh element for this dimension/degree");
  return dim == 1 ? lines[degree - 1] : dim == 2 ? tris[degree - 1] : tets[degree - 1];
}

const std::vector<int>& gmsh_to_lattice(int dim, int degree) {
  static std::map<std::pair<int, int>, std::vector<int>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto& perm = cache[{dim, degree}];
  if (perm.empty()) {
    const auto ref = ReferenceElement::get(dim, degree);
    for (const auto& c : gmsh_tables(dim).at(degree - 1)) {
      MultiIndex alpha{0, 0, 0, 0};
      int s = 0;
      for (int d = 0; d < dim; ++d) {
        alpha[d + 1] = c[d];
        s += c[d];
      }
      alpha[0] = degree - s;
      perm.push_back(ref->node_of(alpha));
    }
  }
  return perm;
}

HighOrderMesh read_msh(const std::filesystem::path& path) {
  Reader r(path);
  std::map<std::pair<int, int>, int> physical;  // (dim, entity) -> physical tag
  std::unordered_map<long long, Index> node_index;
  std::vector<Eigen::Vector3d> xyz;
  std::vector<ElementBlock> blocks;
  std::unordered_map<long long, Eigen::Vector3d> ref_data;
  bool have_format = false;

  std::string s;
  while (r.next_line(s)) {
    if (s.rfind("$MeshFormat", 0) == 0) {
      auto ss = r.tokens();
      double version;
      int file_type, data_size;
      r.parse(ss, version, file_type, data_size);
      if (version < 4.1 - 1e-9 || version >= 5.0) r.fail("only MSH 4.1 is supported");
      if (file_type != 0) r.fail("binary MSH files are not supported", ErrorCategory::Unsupported);
      r.expect("$EndMeshFormat");
      have_format = true;
    } else if (s.rfind("$Entities", 0) == 0) {
      auto ss = r.tokens();
      std::array<long long, 4> counts{};
      r.parse(ss, counts[0], counts[1], counts[2], counts[3]);
      for (int dim = 0; dim < 4; ++dim)
        for (long long i = 0; i < counts[dim]; ++i) {
          auto es = r.tokens();
          int tag;
          double bb;
          r.parse(es, tag);
          const int nbb = dim == 0 ? 3 : 6;
          for (int k = 0; k < nbb; ++k) r.parse(es, bb);
          long long nphys;
          r.parse(es, nphys);
          for (long long k = 0; k < nphys; ++k) {
            int ptag;
            r.parse(es, ptag);
            if (k == 0) physical[{dim, tag}] = std::abs(ptag);
          }
        }
      r.expect("$EndEntities");
    } else if (s.rfind("$Nodes", 0) == 0) {
      auto ss = r.tokens();
      long long nblocks, nnodes, minTag, maxTag;
      r.parse(ss, nblocks, nnodes, minTag, maxTag);
      for (long long b = 0; b < nblocks; ++b) {
        auto bs = r.tokens();
        int edim, etag, parametric;
        long long count;
        r.parse(bs, edim, etag, parametric, count);
        if (parametric != 0) r.fail("parametric node coordinates are not supported");
        std::vector<long long> tags(count);
        for (auto& t : tags) {
          auto ts = r.tokens();
          r.parse(ts, t);
        }
        for (long long t : tags) {
          auto cs = r.tokens();
          Eigen::Vector3d x;
          r.parse(cs, x(0), x(1), x(2));
          if (!node_index.emplace(t, Index(xyz.size())).second) r.fail("duplicate node tag");
          xyz.push_back(x);
        }
      }
      r.expect("$EndNodes");
    } else if (s.rfind("$Elements", 0) == 0) {
      auto ss = r.tokens();
      long long nblocks, nelem, minTag, maxTag;
      r.parse(ss, nblocks, nelem, minTag, maxTag);
      for (long long b = 0; b < nblocks; ++b) {
        auto bs = r.tokens();
        ElementBlock blk;
        long long count;
        r.parse(bs, blk.dim, blk.tag, blk.type, count);
        blk.line = r.line_no();
        const auto kind = kind_of(blk.type);
        const bool is_point = blk.type == 15;
        if (!kind && !is_point)
          r.fail("unsupported element type " + std::to_string(blk.type), ErrorCategory::Unsupported);
        const int nn = is_point ? 1 : lattice_size(kind->dim, kind->degree);
        for (long long e = 0; e < count; ++e) {
          auto es = r.tokens();
          long long etag;
          r.parse(es, etag);
          std::vector<long long> nodes(nn);
          for (auto& n : nodes) r.parse(es, n);
          blk.nodes.push_back(std::move(nodes));
        }
        if (!is_point) blocks.push_back(std::move(blk));
      }
      r.expect("$EndElements");
    } else if (s.rfind("$NodeData", 0) == 0) {
      auto ns = r.tokens();
      int nstring;
      r.parse(ns, nstring);
      std::string name;
      for (int i = 0; i < nstring; ++i) {
        std::string v = r.line();
        if (i == 0) name = v;
      }
      auto rs = r.tokens();
      int nreal;
      r.parse(rs, nreal);
      for (int i = 0; i < nreal; ++i) r.line();
      auto is = r.tokens();
      int nint;
      r.parse(is, nint);
      std::vector<long long> ints(nint);
      for (auto& v : ints) {
        auto vs = r.tokens();
        r.parse(vs, v);
      }
      const bool wanted = name.find("reference_coordinates") != std::string::npos;
      if (wanted && (nint < 3 || ints[1] != 3)) r.fail("reference_coordinates must have 3 components");
      const long long count = nint >= 3 ? ints[2] : 0;
      for (long long i = 0; i < count; ++i) {
        auto vs = r.tokens();
        long long tag;
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        r.parse(vs, tag);
        if (wanted) {
          r.parse(vs, x(0), x(1), x(2));
          ref_data[tag] = x;
        }
      }
      r.expect("$EndNodeData");
    } else if (s[0] == '$') {
      // Unknown section: skip to its end marker.
      const std::string end = "$End" + s.substr(1);
      std::string t;
      bool closed = false;
      while (r.next_line(t))
        if (t.rfind(end, 0) == 0) {
          closed = true;
          break;
        }
      if (!closed) r.fail("unterminated section " + s);
    } else {
      r.fail("unexpected content outside of a section");
    }
  }
  if (!have_format) r.fail("missing $MeshFormat");

  int dim = 0;
  for (const auto& b : blocks) dim = std::max(dim, kind_of(b.type)->dim);
  if (dim < 2) r.fail("no triangle or tetrahedron elements found");
  int degree = 0;
  for (const auto& b : blocks)
    if (kind_of(b.type)->dim == dim) {
      const int p = kind_of(b.type)->degree;
      if (degree != 0 && p != degree)
        throw Error(ErrorCategory::Unsupported, "mixed element degrees are not supported");
      degree = p;
    }

  auto lookup = [&](long long tag) {
    auto it = node_index.find(tag);
    if (it == node_index.end())
      throw Error(ErrorCategory::Parse, path.string() + ": element refers to unknown node " + std::to_string(tag));
    return it->second;
  };

  const auto ref = ReferenceElement::get(dim, degree);
  const auto& perm = gmsh_to_lattice(dim, degree);
  std::vector<std::vector<Index>> elems;
  for (const auto& b : blocks) {
    if (kind_of(b.type)->dim != dim) continue;
    for (const auto& nodes : b.nodes) {
      std::vector<Index> col(ref->num_nodes());
      for (size_t g = 0; g < nodes.size(); ++g) col[perm[g]] = lookup(nodes[g]);
      elems.push_back(std::move(col));
    }
  }
  IndexMatrix conn(ref->num_nodes(), Index(elems.size()));
  for (Index e = 0; e < conn.cols(); ++e)
    for (Index a = 0; a < conn.rows(); ++a) conn(a, e) = elems[e][a];

  // Element faces keyed by sorted vertex node ids.
  std::map<std::vector<Index>, std::pair<Index, int>> owner;
  for (Index e = 0; e < conn.cols(); ++e)
    for (int f = 0; f <= dim; ++f) {
      std::vector<Index> key;
      for (int v : ref->face_vertices(f)) key.push_back(conn(ref->vertex_node(v), e));
      std::sort(key.begin(), key.end());
      owner.emplace(std::move(key), std::make_pair(e, f));
    }
  std::vector<BoundaryFace> faces;
  for (const auto& b : blocks) {
    const auto kind = *kind_of(b.type);
    if (kind.dim != dim - 1) continue;
    if (kind.degree != degree)
      throw Error(ErrorCategory::Unsupported, "boundary element degree differs from volume degree");
    auto it = physical.find({b.dim, b.tag});
    const int marker = it != physical.end() ? it->second : b.tag;
    for (const auto& nodes : b.nodes) {
      std::vector<Index> key;
      for (int v = 0; v < dim; ++v) key.push_back(lookup(nodes[v]));
      std::sort(key.begin(), key.end());
      auto f = owner.find(key);
      if (f == owner.end())
        throw Error(ErrorCategory::Parse, path.string() + ":" + std::to_string(b.line) +
                                              ": boundary element is not a face of any volume element");
      faces.push_back({f->second.first, f->second.second, marker});
    }
  }

  // Compact node numbering restricted to nodes used by volume elements.
  const Index n = Index(xyz.size());
  Eigen::MatrixXd coords(dim, n), refc(dim, n);
  for (Index i = 0; i < n; ++i) coords.col(i) = xyz[i].head(dim);
  refc = coords;
  if (!ref_data.empty()) {
    for (const auto& [tag, idx] : node_index) {
      auto it = ref_data.find(tag);
      if (it == ref_data.end())
        throw Error(ErrorCategory::Parse, path.string() + ": reference_coordinates misses node " + std::to_string(tag));
      refc.col(idx) = it->second.head(dim);
    }
  } else {
    for (Index e = 0; e < conn.cols(); ++e) {
      Eigen::MatrixXd V(dim, dim + 1);
      for (int v = 0; v <= dim; ++v) V.col(v) = coords.col(conn(ref->vertex_node(v), e));
      for (int a = 0; a < ref->num_nodes(); ++a) {
        Eigen::VectorXd x = V.col(0);
        for (int d = 0; d < dim; ++d) x += ref->nodes()(d, a) * (V.col(d + 1) - V.col(0));
        refc.col(conn(a, e)) = x;
      }
    }
  }
  return HighOrderMesh::from_nodes(degree, coords, refc, conn, std::move(faces));
}

void write_msh(const HighOrderMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + path.string());
  const int dim = mesh.dim();
  const int p = mesh.degree();
  const auto& ref = mesh.reference();
  const Index n = mesh.num_nodes();
  char buf[256];
  auto xyz = [&](const Eigen::MatrixXd& X, Index i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", X(0, i), X(1, i), dim == 3 ? X(2, i) : 0.0);
    return std::string(buf);
  };

  std::vector<int> marker_order;
  for (const auto& f : mesh.boundary_faces())
    if (std::find(marker_order.begin(), marker_order.end(), f.marker) == marker_order.end())
      marker_order.push_back(f.marker);

  Eigen::Vector3d lo = Eigen::Vector3d::Zero(), hi = Eigen::Vector3d::Zero();
  if (n > 0) {
    lo.head(dim) = mesh.coords().rowwise().minCoeff();
    hi.head(dim) = mesh.coords().rowwise().maxCoeff();
  }
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g", lo(0), lo(1), lo(2), hi(0), hi(1), hi(2));
  const std::string bbox = buf;

  out << "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
  out << "$Entities\n";
  if (dim == 2) out << "0 " << marker_order.size() << " 1 0\n";
  else out << "0 0 " << marker_order.size() << " 1\n";
  for (int m : marker_order) out << m << ' ' << bbox << " 1 " << m << " 0\n";
  out << "1 " << bbox << " 0 0\n";
  out << "$EndEntities\n";

  out << "$Nodes\n1 " << n << " 1 " << n << "\n" << dim << " 1 0 " << n << "\n";
  for (Index i = 0; i < n; ++i) out << i + 1 << '\n';
  for (Index i = 0; i < n; ++i) out << xyz(mesh.coords(), i) << '\n';
  out << "$EndNodes\n";

  const Index ne = mesh.num_elements();
  const Index nf = Index(mesh.boundary_faces().size());
  out << "$Elements\n" << 1 + marker_order.size() << ' ' << ne + nf << " 1 " << ne + nf << "\n";
  const auto& perm = gmsh_to_lattice(dim, p);
  out << dim << " 1 " << gmsh_element_type(dim, p) << ' ' << ne << '\n';
  Index tag = 1;
  for (Index e = 0; e < ne; ++e) {
    out << tag++;
    for (int g : perm) out << ' ' << mesh.elements()(g, e) + 1;
    out << '\n';
  }
  const auto& fperm = gmsh_to_lattice(dim - 1, p);
  for (int m : marker_order) {
    Index count = 0;
    for (const auto& f : mesh.boundary_faces()) count += f.marker == m;
    out << dim - 1 << ' ' << m << ' ' << gmsh_element_type(dim - 1, p) << ' ' << count << '\n';
    for (const auto& f : mesh.boundary_faces()) {
      if (f.marker != m) continue;
      const auto& fn = ref.face_nodes(f.local_face);
      out << tag++;
      for (int g : fperm) out << ' ' << mesh.elements()(fn[g], f.element) + 1;
      out << '\n';
    }
  }
  out << "$EndElements\n";

  out << "$NodeData\n1\n\"reference_coordinates\"\n1\n0\n3\n0\n3\n" << n << '\n';
  for (Index i = 0; i < n; ++i) out << i + 1 << ' ' << xyz(mesh.reference_coords(), i) << '\n';
  out << "$EndNodeData\n";
  if (!out) throw Error(ErrorCategory::Io, "failed writing " + path.string());
}

std::vector<std::vector<int>> subdivision_cells(int dim, int s) {
  // In the coordinates a_m = sum of the last (m+1) lattice indices, the
  // simplex becomes {0 <= a_0 <= ... <= a_{dim-1} <= s}, a union of Kuhn
  // simplices of the unit-cube grid.
  const auto lattice = lattice_indices(dim, s);
  std::map<std::array<int, 3>, int> lookup;
  for (size_t i = 0; i < lattice.size(); ++i) {
    std::array<int, 3> key{0, 0, 0};
    for (int d = 0; d < dim; ++d) key[d] = lattice[i][d + 1];
    lookup[key] = int(i);
  }
  auto to_lattice = [&](const std::array<int, 3>& a) -> int {
    // a_0 <= a_1 <= ...; recover (i, j, k) from partial sums.
    std::array<int, 3> c{0, 0, 0};
    if (dim == 2) {
      c[1] = a[0];
      c[0] = a[1] - a[0];
    } else {
      c[2] = a[0];
      c[1] = a[1] - a[0];
      c[0] = a[2] - a[1];
    }
    auto it = lookup.find(c);
    return it == lookup.end() ? -1 : it->second;
  };
  std::vector<int> perm(dim);
  for (int d = 0; d < dim; ++d) perm[d] = d;
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::vector<int>> cells;
  std::array<int, 3> base{0, 0, 0};
  const int kmax = dim == 3 ? s : 1;
  for (base[2] = 0; base[2] < kmax; ++base[2])
    for (base[1] = 0; base[1] < s; ++base[1])
      for (base[0] = 0; base[0] < s; ++base[0])
        for (const auto& pm : perms) {
          std::array<int, 3> a = base;
          if (dim == 2) a[2] = 0;
          std::vector<std::array<int, 3>> verts{a};
          for (int step = 0; step < dim; ++step) {
            ++a[pm[step]];
            verts.push_back(a);
          }
          bool inside = true;
          std::vector<int> cell;
          for (const auto& v : verts) {
            for (int d = 0; d + 1 < dim; ++d) inside &= v[d] <= v[d + 1];
            inside &= v[0] >= 0 && v[dim - 1] <= s;
            if (!inside) break;
            cell.push_back(to_lattice(v));
          }
          if (inside) cells.push_back(std::move(cell));
        }
  // Positive orientation in reference coordinates.
  for (auto& c : cells) {
    Eigen::MatrixXd J(dim, dim);
    for (int d = 0; d < dim; ++d)
      for (int r = 0; r < dim; ++r) J(r, d) = lattice[c[d + 1]][r + 1] - lattice[c[0]][r + 1];
    if (J.determinant() < 0) std::swap(c[0], c[1]);
  }
  return cells;
}

void write_vtk(const HighOrderMesh& mesh, const std::filesystem::path& path, int subdivisions,
               const std::optional<Eigen::VectorXd>& quality) {
  if (subdivisions < 1) throw Error(ErrorCategory::Parameter, "subdivisions must be >= 1");
  if (quality && quality->size() != mesh.num_elements())
    throw Error(ErrorCategory::Parameter, "quality field needs one value per element");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + path.string());
  const int dim = mesh.dim();
  const auto& ref = mesh.reference();
  const auto lattice = lattice_indices(dim, subdivisions);
  const auto cells = subdivision_cells(dim, subdivisions);
  Eigen::MatrixXd S(lattice.size(), ref.num_nodes());
  for (size_t i = 0; i < lattice.size(); ++i) {
    Eigen::VectorXd xi(dim);
    for (int d = 0; d < dim; ++d) xi(d) = double(lattice[i][d + 1]) / subdivisions;
    S.row(Index(i)) = ref.shape(xi).transpose();
  }
  const Index ne = mesh.num_elements();
  const Index npts = ne * Index(lattice.size());
  const Index ncells = ne * Index(cells.size());
  out << "# vtk DataFile Version 3.0\nhocurve high-order mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << npts << " double\n";
  char buf[128];
  for (Index e = 0; e < ne; ++e) {
    const Eigen::MatrixXd P = S * mesh.element_coords(e);
    for (Index i = 0; i < P.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", P(i, 0), P(i, 1), dim == 3 ? P(i, 2) : 0.0);
      out << buf;
    }
  }
  out << "CELLS " << ncells << ' ' << ncells * (dim + 2) << '\n';
  for (Index e = 0; e < ne; ++e)
    for (const auto& c : cells) {
      out << dim + 1;
      for (int v : c) out << ' ' << e * Index(lattice.size()) + v;
      out << '\n';
    }
  out << "CELL_TYPES " << ncells << '\n';
  for (Index c = 0; c < ncells; ++c) out << (dim == 2 ? 5 : 10) << '\n';
  if (quality) {
    out << "CELL_DATA " << ncells << '\n';
    for (const char* name : {"quality", "one_minus_quality"}) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      const bool flip = name[0] == 'o';
      for (Index e = 0; e < ne; ++e)
        for (size_t c = 0; c < cells.size(); ++c) {
          std::snprintf(buf, sizeof buf, "%.17g\n", flip ? 1.0 - (*quality)(e) : (*quality)(e));
          out << buf;
        }
    }
  }
  if (!out) throw Error(ErrorCategory::Io, "failed writing " + path.string());
}

}  // namespace hocurve
