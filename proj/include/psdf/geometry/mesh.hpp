#pragma once

#include "psdf/geometry/grid.hpp"

#include <array>
#include <string>
#include <vector>

namespace psdf::geometry {

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  double area() const;
  void validate() const;
};

/// Every undirected edge is shared by exactly two triangles.
bool is_watertight(const Mesh& mesh);

/// Vertices are interpolated linearly along grid edges; a node with value
/// exactly `iso` counts as outside. Vertices on shared edges are welded and
/// zero-area triangles are dropped.
Mesh marching_cubes(const SdfGrid& grid, double iso = 0.0);

void write_obj(const Mesh& mesh, const std::string& path);
Mesh read_obj(const std::string& path);

}  // namespace psdf::geometry
