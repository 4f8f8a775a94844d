#pragma once

#include "psdf/geometry/scene.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psdf::sampling {

using geometry::Vec3;

struct PointSample {
  Vec3 position = Vec3::Zero();
  double sdf = 0.0;
};

/// The four training bands, equally weighted.
inline constexpr std::array<std::array<double, 2>, 4> kSdfBands = {{
    {-0.10, -0.03},
    {-0.03, 0.00},
    {0.00, 0.03},
    {0.03, 0.10},
}};

/// Band index for `sdf`: bands are half-open [lo, hi) except the last,
/// which includes 0.10. Returns -1 outside all bands.
int band_of(double sdf);

struct BandSampleOptions {
  /// Proposals per band before giving up, as a multiple of the per-band count.
  std::uint64_t budget_factor = 1000;
  /// When set, proposals snap to the nodes of a grid_res^3 lattice over [-1,1]^3.
  std::optional<int> grid_res;
};

/// Rejection-samples count/4 points per band from uniform proposals in
/// [-1, 1]^3. Points are returned in acceptance order. Throws DataError when
/// `count` is not divisible by 4 or a band stays unfilled within the budget.
std::vector<PointSample> band_sample(const geometry::SdfScene& scene, std::size_t count, std::uint64_t seed,
                                     const BandSampleOptions& options = {});

/// Greedy max-min selection starting at index `start`; returns the indices
/// of the chosen points in selection order. Ties go to the lowest index.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t k, std::size_t start = 0);

/// res^3 points spanning [-1, 1]^3 inclusive, x fastest.
std::vector<Vec3> test_grid(int res = 65);

struct SampleSet {
  std::vector<PointSample> points;
  std::size_t stage1_count = 32768;
  std::size_t stage2_count = 2048;
};

/// Band sampling followed by farthest-point downsampling.
SampleSet sample_scene(const geometry::SdfScene& scene, std::uint64_t seed, std::size_t stage1_count = 32768,
                       std::size_t stage2_count = 2048, const BandSampleOptions& options = {});

/// One JSON header line terminated by '\n', then little-endian float32
/// records (x, y, z, sdf).
void save_sample_set(const SampleSet& set, const std::string& path);
SampleSet load_sample_set(const std::string& path);

}  // namespace psdf::sampling
