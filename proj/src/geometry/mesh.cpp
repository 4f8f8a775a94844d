#include "psdf/geometry/mesh.hpp"

#include "mc_tables.hpp"
#include "psdf/error.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace psdf::geometry {
namespace {

constexpr double kEdgeInset = 1e-9;

constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};
constexpr std::array<std::array<int, 2>, 12> kEdge = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

}  // namespace

double Mesh::area() const {
  double total = 0.0;
  for (const auto& t : triangles) {
    total += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return total;
}

void Mesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int v : t) {
      if (v < 0 || v >= n) throw DataError("mesh: triangle index out of range");
    }
  }
}

bool is_watertight(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e];
      const int b = t[(e + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [edge, count] : edges) {
    if (count != 2) return false;
  }
  return true;
}

Mesh marching_cubes(const SdfGrid& grid, double iso) {
  const auto [nx, ny, nz] = grid.resolution;
  if (nx < 2 || ny < 2 || nz < 2) throw DataError("marching_cubes: need at least 2 nodes per axis");
  if (grid.values.size() != grid.node_count()) throw DataError("marching_cubes: value count mismatch");

  Mesh mesh;
  std::unordered_map<std::uint64_t, int> welded;

  // One vertex per crossed grid edge, interpolated from the lower node and
  // kept strictly inside the edge, so no two vertices coincide.
  auto edge_vertex = [&](int i, int j, int k, int axis) -> int {
    std::array<int, 3> hi{i, j, k};
    ++hi[axis];
    const std::size_t lo_index = grid.index(i, j, k);
    const std::size_t hi_index = grid.index(hi[0], hi[1], hi[2]);
    const double v0 = grid.values[lo_index];
    const double v1 = grid.values[hi_index];
    const double t = std::clamp((iso - v0) / (v1 - v0), kEdgeInset, 1.0 - kEdgeInset);
    const std::uint64_t key = lo_index * 3 + static_cast<std::uint64_t>(axis);
    Vec3 p = grid.node(i, j, k);
    p[axis] += t * grid.spacing[axis];
    auto [it, inserted] = welded.try_emplace(key, static_cast<int>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(p);
    return it->second;
  };

  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = kCorner[c];
          if (grid.at(i + o[0], j + o[1], k + o[2]) < iso) cube |= 1 << c;
        }
        const std::uint16_t edges = detail::kEdgeTable[cube];
        if (edges == 0) continue;
        std::array<int, 12> ids{};
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const auto& a = kCorner[kEdge[e][0]];
          const auto& b = kCorner[kEdge[e][1]];
          int axis = 0;
          while (a[axis] == b[axis]) ++axis;
          ids[e] = edge_vertex(i + std::min(a[0], b[0]), j + std::min(a[1], b[1]),
                               k + std::min(a[2], b[2]), axis);
        }
        const auto& tri = detail::kTriTable[cube];
        for (int t = 0; tri[t] != -1; t += 3) {
          const std::array<int, 3> f{ids[tri[t]], ids[tri[t + 1]], ids[tri[t + 2]]};
          mesh.triangles.push_back(f);
        }
      }
    }
  }
  return mesh;
}

void write_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mesh file " + path);
  char line[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << line;
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

Mesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read mesh file " + path);
  Mesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (!ss) throw DataError("mesh " + path + ": malformed vertex line");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ss >> token) {
        int idx = std::stoi(token.substr(0, token.find('/')));
        idx = idx < 0 ? static_cast<int>(mesh.vertices.size()) + idx : idx - 1;
        face.push_back(idx);
      }
      if (face.size() < 3) throw DataError("mesh " + path + ": face with fewer than 3 vertices");
      for (std::size_t f = 1; f + 1 < face.size(); ++f) mesh.triangles.push_back({face[0], face[f], face[f + 1]});
    }
  }
  mesh.validate();
  return mesh;
}

}  // namespace psdf::geometry
