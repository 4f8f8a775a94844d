#pragma once

#include "psdf/geometry/mesh.hpp"
#include "psdf/geometry/scene.hpp"

#include <cstdint>
#include <vector>

namespace psdf::geometry {

/// Cell occupancy over an axis-aligned box; cell (i, j, k) is stored at
/// i + res * (j + res * k).
struct OccupancyGrid {
  int resolution = 0;
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);
  std::vector<std::uint8_t> cells;

  Vec3 cell_center(int i, int j, int k) const;
  std::size_t occupied() const;
  double occupied_fraction() const {
    return cells.empty() ? 0.0 : static_cast<double>(occupied()) / cells.size();
  }
};

/// Occupied iff the scene SDF is negative at the cell center.
OccupancyGrid solid_voxelize(const SdfScene& scene, int resolution,
                             const Vec3& lo = Vec3::Constant(-1.0),
                             const Vec3& hi = Vec3::Constant(1.0));

/// Occupied iff a +z ray from the cell center crosses the mesh an odd number
/// of times. Throws GeometryError for meshes that are not watertight.
OccupancyGrid solid_voxelize(const Mesh& mesh, int resolution,
                             const Vec3& lo = Vec3::Constant(-1.0),
                             const Vec3& hi = Vec3::Constant(1.0));

}  // namespace psdf::geometry
