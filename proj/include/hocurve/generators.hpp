#pragma once

#include "hocurve/mesh.hpp"

#include <cstdint>

namespace hocurve {

/// Boundary markers used by the built-in generators.
namespace markers {
inline constexpr int inner = 1;
inline constexpr int outer = 2;
inline constexpr int cut_source = 3;
inline constexpr int cut_target = 4;
}  // namespace markers

struct GeneratorOptions {
  /// Random displacement of interior vertices, as a fraction of the local
  /// radial spacing. Zero keeps the structured layout.
  double jitter = 0.0;
  std::uint64_t seed = 1;
};

/// Linear annulus (dim 2) or spherical shell (dim 3) between two radii
/// centred at the origin. Inner boundary carries markers::inner, outer
/// markers::outer. Element counts grow 4x (2D) or 8x (3D) per level.
HighOrderMesh generate_shell_mesh(double inner_radius, double outer_radius,
                                  int refinement, int dim,
                                  const GeneratorOptions& options = {});

/// Planar annular sector between polar angles 0 and `angle`. The cut at
/// angle 0 carries markers::cut_source, the one at `angle`
/// markers::cut_target; both cuts have matching vertex distributions.
HighOrderMesh generate_sector_mesh(double inner_radius, double outer_radius,
                                   double angle, int refinement,
                                   const GeneratorOptions& options = {});

/// Axis-aligned box [0, size]^dim split into n^dim cells of simplices. Face
/// markers: 1 + 2 * axis for the low side, 2 + 2 * axis for the high side.
HighOrderMesh generate_box_mesh(double size, int n, int dim);

}  // namespace hocurve
