#include "psdf/geometry/grid.hpp"

#include "psdf/binary_io.hpp"
#include "psdf/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace psdf::geometry {

void SdfGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] < 1) throw DataError("SdfGrid: resolution must be positive");
    if (!(spacing[a] > 0.0)) throw DataError("SdfGrid: spacing must be positive");
  }
  if (values.size() != node_count()) throw DataError("SdfGrid: value count does not match resolution");
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("SdfGrid: non-finite value");
  }
}

SdfGrid make_grid(const std::array<int, 3>& resolution, const Vec3& lo, const Vec3& hi) {
  SdfGrid grid;
  grid.resolution = resolution;
  grid.origin = lo;
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] < 2) throw DataError("make_grid: need at least 2 nodes per axis");
    grid.spacing[a] = (hi[a] - lo[a]) / (resolution[a] - 1);
  }
  grid.values.assign(grid.node_count(), 0.0);
  return grid;
}

void fill_grid(SdfGrid& grid, const std::function<double(const Vec3&)>& field) {
  grid.values.resize(grid.node_count());
  for (int k = 0; k < grid.resolution[2]; ++k) {
    for (int j = 0; j < grid.resolution[1]; ++j) {
      for (int i = 0; i < grid.resolution[0]; ++i) {
        grid.values[grid.index(i, j, k)] = field(grid.node(i, j, k));
      }
    }
  }
}

SdfGrid sample_grid(const SdfScene& scene, const std::array<int, 3>& resolution, const Vec3& lo,
                    const Vec3& hi) {
  SdfGrid grid = make_grid(resolution, lo, hi);
  fill_grid(grid, [&](const Vec3& p) { return scene.eval(p); });
  return grid;
}

SdfGrid pad_grid(const SdfGrid& grid, double value) {
  SdfGrid out;
  out.resolution = {grid.resolution[0] + 2, grid.resolution[1] + 2, grid.resolution[2] + 2};
  out.spacing = grid.spacing;
  out.origin = grid.origin - grid.spacing;
  out.values.assign(out.node_count(), value);
  for (int k = 0; k < grid.resolution[2]; ++k) {
    for (int j = 0; j < grid.resolution[1]; ++j) {
      for (int i = 0; i < grid.resolution[0]; ++i) {
        out.values[out.index(i + 1, j + 1, k + 1)] = grid.at(i, j, k);
      }
    }
  }
  return out;
}

void save_grid(const SdfGrid& grid, const std::string& header_path) {
  namespace fs = std::filesystem;
  const fs::path header(header_path);
  const fs::path raw = fs::path(header).replace_extension(".raw");
  nlohmann::json j;
  j["version"] = 1;
  j["resolution"] = grid.resolution;
  j["origin"] = {grid.origin.x(), grid.origin.y(), grid.origin.z()};
  j["spacing"] = {grid.spacing.x(), grid.spacing.y(), grid.spacing.z()};
  j["endianness"] = "little";
  j["dtype"] = "float32";
  j["order"] = "x-fastest";
  j["data"] = raw.filename().string();
  std::ofstream h(header);
  if (!h) throw DataError("cannot write grid header " + header_path);
  h << j.dump(2) << '\n';
  std::ofstream r(raw, std::ios::binary);
  if (!r) throw DataError("cannot write grid data " + raw.string());
  io::write_le<float>(r, std::span<const double>(grid.values));
}

SdfGrid load_grid(const std::string& header_path) {
  namespace fs = std::filesystem;
  std::ifstream h(header_path);
  if (!h) throw DataError("cannot read grid header " + header_path);
  SdfGrid grid;
  try {
    const auto j = nlohmann::json::parse(h);
    if (j.value("endianness", "little") != "little" || j.value("dtype", "float32") != "float32") {
      throw DataError("grid " + header_path + ": only little-endian float32 data is supported");
    }
    grid.resolution = j.at("resolution").get<std::array<int, 3>>();
    const auto o = j.at("origin").get<std::array<double, 3>>();
    const auto s = j.at("spacing").get<std::array<double, 3>>();
    grid.origin = Vec3(o[0], o[1], o[2]);
    grid.spacing = Vec3(s[0], s[1], s[2]);
    const fs::path raw = fs::path(header_path).parent_path() / j.at("data").get<std::string>();
    std::ifstream r(raw, std::ios::binary);
    if (!r || !io::read_le<float>(r, grid.node_count(), grid.values)) {
      throw DataError("grid " + header_path + ": truncated or missing data file");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("grid " + header_path + ": " + e.what());
  }
  grid.validate();
  return grid;
}

}  // namespace psdf::geometry
