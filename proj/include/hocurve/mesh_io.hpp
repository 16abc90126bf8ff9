#pragma once

#include "hocurve/mesh.hpp"

#include <filesystem>
#include <optional>

namespace hocurve {

/// Reads a Gmsh MSH 4.1 ASCII file (triangles/tetrahedra of degree 1..4 with
/// line/triangle boundary elements). Boundary markers are the physical tags of
/// the boundary entities (entity tags when no physical tag is set). A
/// `$NodeData` view named "reference_coordinates" restores the reference
/// configuration; otherwise the straight-sided lattice of each element's
/// vertices is used.
HighOrderMesh read_msh(const std::filesystem::path& path);

/// Writes the mesh in the subset understood by read_msh, including the
/// reference configuration as node data. Coordinates are written with 17
/// significant digits, so read_msh(write_msh(m)) reproduces them exactly.
void write_msh(const HighOrderMesh& mesh, const std::filesystem::path& path);

/// Legacy VTK unstructured grid of straight sub-simplices, `subdivisions`^dim
/// per element, sampling the curved map at the subdivision lattice. When
/// given, `quality` (one value per element) is written as cell fields
/// "quality" and "one_minus_quality".
void write_vtk(const HighOrderMesh& mesh, const std::filesystem::path& path, int subdivisions,
               const std::optional<Eigen::VectorXd>& quality = std::nullopt);

/// Gmsh element type for a simplex of dimension dim (1..3) and degree 1..4.
int gmsh_element_type(int dim, int degree);

/// Lattice node (see ReferenceElement) of each Gmsh node of an element.
const std::vector<int>& gmsh_to_lattice(int dim, int degree);

/// Local sub-simplices of the regular subdivision of a reference simplex;
/// entries index lattice_indices(dim, subdivisions).
std::vector<std::vector<int>> subdivision_cells(int dim, int subdivisions);

}  // namespace hocurve
