#pragma once

#include "psdf/geometry/mesh.hpp"
#include "psdf/geometry/voxelize.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace psdf::eval {

using geometry::Vec3;

/// Mean squared nearest-neighbour distance from A to B plus from B to A.
/// Throws DataError when either set is empty.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

enum class EmdMode {
  Auto,    // exact up to kEmdExactLimit points, auction above
  Exact,   // Hungarian assignment
  Approx,  // auction with epsilon scaling
};

inline constexpr std::size_t kEmdExactLimit = 512;

struct EmdResult {
  /// Mean matched Euclidean distance of the returned assignment.
  double value = 0.0;
  /// Certified lower bound on the optimal mean distance.
  double lower_bound = 0.0;
  bool exact = false;
  /// assignment[i] is the index in B matched to A[i].
  std::vector<int> assignment;
};

struct AuctionOptions {
  /// Stop once the assignment is provably within this relative gap of the
  /// optimum.
  double relative_gap = 0.01;
};

/// Mean matched distance of a minimum-cost perfect matching between equally
/// sized sets. Throws DataError on a size mismatch.
EmdResult emd(std::span<const Vec3> a, std::span<const Vec3> b, EmdMode mode = EmdMode::Auto,
              const AuctionOptions& options = {});

/// 100 * |A and B| / |A or B|; two empty grids score 100. Throws DataError
/// when the grids differ in resolution or bounds.
double iou(const geometry::OccupancyGrid& a, const geometry::OccupancyGrid& b);

/// `count` points distributed uniformly by area over the mesh surface.
/// Throws GeometryError for meshes without area.
std::vector<Vec3> sample_surface(const geometry::Mesh& mesh, std::size_t count, std::uint64_t seed);

struct MetricsReport {
  double cd = 0.0;   // chamfer x 1000
  double emd = 0.0;  // emd x 100
  double iou = 0.0;  // percent
  double cd_raw = 0.0;
  double emd_raw = 0.0;
  bool emd_exact = true;
  std::size_t point_count = 0;
  int voxel_res = 0;
};

nlohmann::json metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

struct MetricsOptions {
  std::size_t point_count = 2048;
  int voxel_res = 64;
  std::uint64_t seed = 2048;
};

/// Compares a reconstruction with its reference. The reference occupancy is
/// passed in so callers can use an exact one (e.g. from an analytic SDF);
/// the reconstruction is voxelized from its mesh, which must be watertight.
MetricsReport compute_metrics(const geometry::Mesh& predicted, const geometry::Mesh& reference,
                              const geometry::OccupancyGrid& reference_occupancy,
                              const MetricsOptions& options = {});

}  // namespace psdf::eval
