#include "psdf/sampling/sampling.hpp"

#include "psdf/binary_io.hpp"
#include "psdf/error.hpp"
#include "psdf/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>

namespace psdf::sampling {

int band_of(double sdf) {
  for (int b = 0; b < static_cast<int>(kSdfBands.size()); ++b) {
    const auto [lo, hi] = kSdfBands[b];
    const bool last = b + 1 == static_cast<int>(kSdfBands.size());
    if (sdf >= lo && (sdf < hi || (last && sdf <= hi))) return b;
  }
  return -1;
}

std::vector<PointSample> band_sample(const geometry::SdfScene& scene, std::size_t count, std::uint64_t seed,
                                     const BandSampleOptions& options) {
  if (count % kSdfBands.size() != 0) throw DataError("band_sample: count must be divisible by 4");
  const std::size_t per_band = count / kSdfBands.size();
  const std::uint64_t budget = options.budget_factor * per_band;

  std::array<std::size_t, 4> filled{};
  std::vector<PointSample> out;
  out.reserve(count);
  CounterRng rng(seed, 0x62616e64);

  auto coordinate = [&]() {
    if (options.grid_res) {
      const int n = *options.grid_res;
      return -1.0 + 2.0 * static_cast<double>(rng.below(static_cast<std::uint64_t>(n))) / (n - 1);
    }
    return rng.uniform(-1.0, 1.0);
  };

  for (std::uint64_t proposal = 0; out.size() < count; ++proposal) {
    if (proposal >= budget) {
      for (std::size_t b = 0; b < filled.size(); ++b) {
        if (filled[b] < per_band) {
          throw DataError("band_sample: SDF band [" + std::to_string(kSdfBands[b][0]) + ", " +
                          std::to_string(kSdfBands[b][1]) + "] unreachable: " + std::to_string(filled[b]) +
                          " of " + std::to_string(per_band) + " points after " + std::to_string(budget) +
                          " proposals");
        }
      }
    }
    const double x = coordinate();
    const double y = coordinate();
    const double z = coordinate();
    const Vec3 p(x, y, z);
    const double d = scene.eval(p);
    const int b = band_of(d);
    if (b < 0 || filled[b] == per_band) continue;
    ++filled[b];
    out.push_back({p, d});
  }
  return out;
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t k, std::size_t start) {
  if (k > points.size()) {
    throw DataError("farthest_point_sample: requested " + std::to_string(k) + " of " +
                    std::to_string(points.size()) + " points");
  }
  if (k == 0) return {};
  if (start >= points.size()) throw DataError("farthest_point_sample: start index out of range");
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  std::size_t next = start;
  for (std::size_t n = 0; n < k; ++n) {
    chosen.push_back(next);
    const Vec3 c = points[next];
    double best = -1.0;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = (points[i] - c).squaredNorm();
      if (d < nearest[i]) nearest[i] = d;
      if (nearest[i] > best) {
        best = nearest[i];
        best_index = i;
      }
    }
    next = best_index;
  }
  return chosen;
}

std::vector<Vec3> test_grid(int res) {
  if (res < 2) throw DataError("test_grid: resolution must be at least 2");
  const double step = 2.0 / (res - 1);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(res) * res * res);
  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) out.emplace_back(-1.0 + i * step, -1.0 + j * step, -1.0 + k * step);
    }
  }
  return out;
}

SampleSet sample_scene(const geometry::SdfScene& scene, std::uint64_t seed, std::size_t stage1_count,
                       std::size_t stage2_count, const BandSampleOptions& options) {
  const auto stage1 = band_sample(scene, stage1_count, seed, options);
  std::vector<Vec3> positions;
  positions.reserve(stage1.size());
  for (const auto& s : stage1) positions.push_back(s.position);
  SampleSet set;
  set.stage1_count = stage1_count;
  set.stage2_count = stage2_count;
  for (std::size_t i : farthest_point_sample(positions, stage2_count)) set.points.push_back(stage1[i]);
  return set;
}

void save_sample_set(const SampleSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sample set " + path);
  const nlohmann::json header = {{"version", 1},
                                 {"count", set.points.size()},
                                 {"stage1_count", set.stage1_count},
                                 {"stage2_count", set.stage2_count},
                                 {"fields", {"x", "y", "z", "sdf"}},
                                 {"dtype", "float32"},
                                 {"endianness", "little"}};
  out << header.dump() << '\n';
  std::vector<double> flat;
  flat.reserve(set.points.size() * 4);
  for (const auto& p : set.points) {
    flat.insert(flat.end(), {p.position.x(), p.position.y(), p.position.z(), p.sdf});
  }
  io::write_le<float>(out, std::span<const double>(flat));
}

SampleSet load_sample_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read sample set " + path);
  std::string line;
  std::getline(in, line);
  SampleSet set;
  std::size_t count = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    count = header.at("count").get<std::size_t>();
    set.stage1_count = header.value("stage1_count", std::size_t{32768});
    set.stage2_count = header.value("stage2_count", count);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("sample set " + path + ": bad header: " + e.what());
  }
  std::vector<double> flat;
  if (!io::read_le<float>(in, count * 4, flat)) throw DataError("sample set " + path + ": truncated records");
  set.points.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    set.points[i] = {Vec3(flat[4 * i], flat[4 * i + 1], flat[4 * i + 2]), flat[4 * i + 3]};
  }
  return set;
}

}  // namespace psdf::sampling
