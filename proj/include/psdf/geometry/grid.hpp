#pragma once

#include "psdf/geometry/scene.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace psdf::geometry {

/// Scalar field sampled on the nodes of a regular grid. Node (i, j, k) sits at
/// origin + (i, j, k) * spacing and is stored at i + nx * (j + ny * k).
struct SdfGrid {
  std::array<int, 3> resolution{0, 0, 0};
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Ones();
  std::vector<double> values;

  std::size_t node_count() const {
    return static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(resolution[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(resolution[1]) * k);
  }
  Vec3 node(int i, int j, int k) const {
    return origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
  }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }

  /// Throws DataError when the invariants (finite values, spacing > 0,
  /// matching node count) do not hold.
  void validate() const;
};

/// Grid of `resolution` nodes spanning [lo, hi] inclusive on each axis.
SdfGrid make_grid(const std::array<int, 3>& resolution, const Vec3& lo, const Vec3& hi);

SdfGrid sample_grid(const SdfScene& scene, const std::array<int, 3>& resolution,
                    const Vec3& lo = Vec3::Constant(-1.0), const Vec3& hi = Vec3::Constant(1.0));

/// Fills an existing grid layout from an arbitrary field.
void fill_grid(SdfGrid& grid, const std::function<double(const Vec3&)>& field);

/// Adds one layer of nodes around the grid holding `value`. Extracting a
/// padded grid with a positive pad closes surfaces that touch the boundary.
SdfGrid pad_grid(const SdfGrid& grid, double value);

/// JSON sidecar at `header_path`, raw little-endian float32 values in
/// `raw_path` (stored relative to the sidecar directory in the header).
void save_grid(const SdfGrid& grid, const std::string& header_path);
SdfGrid load_grid(const std::string& header_path);

}  // namespace psdf::geometry
