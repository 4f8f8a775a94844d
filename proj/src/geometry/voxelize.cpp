#include "psdf/geometry/voxelize.hpp"

#include "psdf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace psdf::geometry {
namespace {

OccupancyGrid empty_grid(int resolution, const Vec3& lo, const Vec3& hi) {
  if (resolution < 1) throw DataError("solid_voxelize: resolution must be positive");
  OccupancyGrid grid;
  grid.resolution = resolution;
  grid.lo = lo;
  grid.hi = hi;
  grid.cells.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
  return grid;
}

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Top-left fill rule for a counter-clockwise triangle (y up): a query exactly
// on a shared edge is claimed by exactly one of the two triangles.
bool top_left(double dx, double dy) { return dy < 0.0 || (dy == 0.0 && dx < 0.0); }

}  // namespace

Vec3 OccupancyGrid::cell_center(int i, int j, int k) const {
  const Vec3 step = (hi - lo) / resolution;
  return lo + Vec3((i + 0.5) * step.x(), (j + 0.5) * step.y(), (k + 0.5) * step.z());
}

std::size_t OccupancyGrid::occupied() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

OccupancyGrid solid_voxelize(const SdfScene& scene, int resolution, const Vec3& lo, const Vec3& hi) {
  OccupancyGrid grid = empty_grid(resolution, lo, hi);
  std::size_t idx = 0;
  for (int k = 0; k < resolution; ++k) {
    for (int j = 0; j < resolution; ++j) {
      for (int i = 0; i < resolution; ++i, ++idx) {
        grid.cells[idx] = scene.eval(grid.cell_center(i, j, k)) < 0.0 ? 1 : 0;
      }
    }
  }
  return grid;
}

OccupancyGrid solid_voxelize(const Mesh& mesh, int resolution, const Vec3& lo, const Vec3& hi) {
  OccupancyGrid grid = empty_grid(resolution, lo, hi);
  mesh.validate();
  if (mesh.empty()) return grid;
  if (!is_watertight(mesh)) {
    throw GeometryError("solid_voxelize: mesh is not watertight (some edge is not shared by exactly "
                        "two triangles); inside/outside parity is ambiguous");
  }

  const Vec3 step = (hi - lo) / resolution;
  std::vector<std::vector<double>> crossings(static_cast<std::size_t>(resolution) * resolution);

  for (const auto& tri : mesh.triangles) {
    Vec3 a = mesh.vertices[tri[0]];
    Vec3 b = mesh.vertices[tri[1]];
    Vec3 c = mesh.vertices[tri[2]];
    double area2 = cross2(b.x() - a.x(), b.y() - a.y(), c.x() - a.x(), c.y() - a.y());
    if (area2 == 0.0) continue;
    if (area2 < 0.0) {
      std::swap(b, c);
      area2 = -area2;
    }
    const double min_x = std::min({a.x(), b.x(), c.x()});
    const double max_x = std::max({a.x(), b.x(), c.x()});
    const double min_y = std::min({a.y(), b.y(), c.y()});
    const double max_y = std::max({a.y(), b.y(), c.y()});
    const int i0 = std::max(0, static_cast<int>(std::ceil((min_x - lo.x()) / step.x() - 0.5)));
    const int i1 = std::min(resolution - 1, static_cast<int>(std::floor((max_x - lo.x()) / step.x() - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::ceil((min_y - lo.y()) / step.y() - 0.5)));
    const int j1 = std::min(resolution - 1, static_cast<int>(std::floor((max_y - lo.y()) / step.y() - 0.5)));

    for (int j = j0; j <= j1; ++j) {
      const double qy = lo.y() + (j + 0.5) * step.y();
      for (int i = i0; i <= i1; ++i) {
        const double qx = lo.x() + (i + 0.5) * step.x();
        const double w_ab = cross2(b.x() - a.x(), b.y() - a.y(), qx - a.x(), qy - a.y());
        const double w_bc = cross2(c.x() - b.x(), c.y() - b.y(), qx - b.x(), qy - b.y());
        const double w_ca = cross2(a.x() - c.x(), a.y() - c.y(), qx - c.x(), qy - c.y());
        const bool inside = (w_ab > 0.0 || (w_ab == 0.0 && top_left(b.x() - a.x(), b.y() - a.y()))) &&
                            (w_bc > 0.0 || (w_bc == 0.0 && top_left(c.x() - b.x(), c.y() - b.y()))) &&
                            (w_ca > 0.0 || (w_ca == 0.0 && top_left(a.x() - c.x(), a.y() - c.y())));
        if (!inside) continue;
        const double z = (w_bc * a.z() + w_ca * b.z() + w_ab * c.z()) / area2;
        crossings[static_cast<std::size_t>(i) + static_cast<std::size_t>(resolution) * j].push_back(z);
      }
    }
  }

  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      auto& zs = crossings[static_cast<std::size_t>(i) + static_cast<std::size_t>(resolution) * j];
      if (zs.empty()) continue;
      if (zs.size() % 2 != 0) {
        throw GeometryError("solid_voxelize: odd ray-crossing count in column (" + std::to_string(i) + ", " +
                            std::to_string(j) + "); inside/outside parity is ambiguous");
      }
      std::sort(zs.begin(), zs.end());
      std::size_t below = 0;
      for (int k = 0; k < resolution; ++k) {
        const double qz = lo.z() + (k + 0.5) * step.z();
        while (below < zs.size() && zs[below] < qz) ++below;
        if (below % 2 == 1) {
          grid.cells[static_cast<std::size_t>(i) +
                     static_cast<std::size_t>(resolution) * (j + static_cast<std::size_t>(resolution) * k)] = 1;
        }
      }
    }
  }
  return grid;
}

}  // namespace psdf::geometry
