#include "psdf/error.hpp"
#include "psdf/eval/metrics.hpp"
#include "psdf/eval/pattern_stats.hpp"
#include "psdf/geometry/scene.hpp"
#include "psdf/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace psdf;
using namespace psdf::eval;
using geometry::Vec3;

namespace {

std::vector<Vec3> cloud(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 1);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return pts;
}

double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto one = [](const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    double s = 0;
    for (const auto& p : x) {
      std::vector<double> d;
      for (const auto& q : y) d.push_back((p - q).squaredNorm());
      s += *std::min_element(d.begin(), d.end());
    }
    return s / x.size();
  };
  return one(a, b) + one(b, a);
}

double brute_emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[perm[i]]).norm();
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / a.size();
}

geometry::OccupancyGrid empty_grid(int res) {
  geometry::OccupancyGrid g;
  g.resolution = res;
  g.cells.assign(static_cast<std::size_t>(res) * res * res, 0);
  return g;
}

}  // namespace

TEST_CASE("chamfer follows the squared-distance two-sided mean convention") {
  const std::vector<Vec3> a{{0, 0, 0}}, b{{1, 0, 0}};
  CHECK(chamfer(a, b) == 2.0);
  CHECK(1000.0 * chamfer(a, b) == 2000.0);
  const auto c = cloud(40, 1);
  CHECK(chamfer(c, c) == 0.0);
  CHECK_THROWS_AS(chamfer(std::vector<Vec3>{}, c), DataError);
}

TEST_CASE("chamfer matches brute force and is symmetric") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = cloud(17 + seed * 4, seed), b = cloud(64 - seed, seed + 100);
    CHECK(chamfer(a, b) == doctest::Approx(brute_chamfer(a, b)).epsilon(1e-14));
    CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-14));
  }
}

TEST_CASE("chamfer is zero when each set lies in the other's support") {
  const std::vector<Vec3> a{{0, 0, 0}, {1, 0, 0}}, b{{0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {0, 0, 0}};
  CHECK(chamfer(a, b) == 0.0);
}

TEST_CASE("emd basics") {
  const std::vector<Vec3> a{{0, 0, 0}}, b{{1, 0, 0}};
  CHECK(emd(a, b).value == 1.0);
  const auto c = cloud(50, 2);
  CHECK(emd(c, c).value == 0.0);
  auto shuffled = c;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(emd(c, shuffled).value == doctest::Approx(0.0).epsilon(0).scale(1).epsilon(1e-15));
  CHECK_THROWS_AS(emd(c, cloud(49, 3)), DataError);
}

TEST_CASE("hungarian matches permutation enumeration") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 1 + seed % 7;
    const auto a = cloud(n, seed), b = cloud(n, seed + 50);
    const auto r = emd(a, b, EmdMode::Exact);
    CHECK(r.exact);
    CHECK(r.value == doctest::Approx(brute_emd(a, b)).epsilon(1e-12));
    std::vector<int> sorted = r.assignment;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == static_cast<int>(i));
    CHECK(emd(b, a, EmdMode::Exact).value == doctest::Approx(r.value).epsilon(1e-12));
  }
}

TEST_CASE("auction stays within 2% of the exact assignment and never below it") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto a = cloud(256, seed), b = cloud(256, seed + 7);
    const auto exact = emd(a, b, EmdMode::Exact);
    const auto approx = emd(a, b, EmdMode::Approx);
    CHECK_FALSE(approx.exact);
    CHECK(approx.value >= exact.value - 1e-12);
    CHECK(approx.value <= 1.02 * exact.value);
    CHECK(approx.lower_bound <= exact.value + 1e-12);
  }
}

TEST_CASE("auction handles clustered and coincident sets") {
  auto a = cloud(300, 9);
  for (auto& p : a) p *= 0.01;
  auto b = a;
  std::reverse(b.begin(), b.end());
  const auto r = emd(a, b, EmdMode::Approx);
  CHECK(r.value <= 1e-9);
  const auto c = cloud(300, 10);
  const auto exact = emd(a, c, EmdMode::Exact);
  CHECK(emd(a, c, EmdMode::Approx).value <= 1.02 * exact.value);
}

TEST_CASE("auto mode switches to the auction above 512 points") {
  CHECK(emd(cloud(512, 1), cloud(512, 2)).exact);
  const auto start = std::chrono::steady_clock::now();
  const auto r = emd(cloud(2048, 1), cloud(2048, 2));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK_FALSE(r.exact);
  CHECK(r.value <= 1.01 * r.lower_bound + 1e-12);
  MESSAGE("2048-point auction: " << seconds << " s");
}

TEST_CASE("iou on occupancy grids") {
  auto a = empty_grid(8), b = empty_grid(8);
  CHECK(iou(a, b) == 100.0);
  a.cells[3] = b.cells[3] = 1;
  a.cells[10] = 1;
  CHECK(iou(a, a) == 100.0);
  CHECK(iou(a, b) == 50.0);
  auto c = empty_grid(8);
  c.cells[100] = 1;
  CHECK(iou(a, c) == 0.0);
  CHECK_THROWS_AS(iou(a, empty_grid(9)), DataError);
}

TEST_CASE("iou is invariant under a shared permutation of cells") {
  CounterRng rng(4, 4);
  auto a = empty_grid(16), b = empty_grid(16);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    a.cells[i] = rng.uniform() < 0.3;
    b.cells[i] = rng.uniform() < 0.4;
  }
  std::vector<std::size_t> perm(a.cells.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::size_t>(perm));
  auto pa = a, pb = b;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    pa.cells[i] = a.cells[perm[i]];
    pb.cells[i] = b.cells[perm[i]];
  }
  CHECK(iou(pa, pb) == iou(a, b));
}

TEST_CASE("unit cubes offset by half an edge overlap by one third") {
  using namespace geometry;
  const SdfScene a(make_box({-0.25, 0, 0}, Vec3::Constant(0.5)));
  const SdfScene b(make_box({0.25, 0, 0}, Vec3::Constant(0.5)));
  const double value = iou(solid_voxelize(a, 64), solid_voxelize(b, 64));
  // Growing or shrinking both cubes by one voxel (1/32) per face bounds the error.
  const double grown = 1.0 + 2.0 / 32.0, shrunk = 1.0 - 2.0 / 32.0;
  CHECK(value >= 100.0 * (shrunk - 0.5) / (shrunk + 0.5));
  CHECK(value <= 100.0 * (grown - 0.5) / (grown + 0.5));
  MESSAGE("half-offset cube IoU: " << value);
}

TEST_CASE("surface samples are on the mesh and spread by area") {
  geometry::Mesh m;
  // Two triangles in the z=0 plane; the second has six times the area.
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}, {5, 0, 0}, {2, 2, 0}};
  m.triangles = {{0, 1, 2}, {3, 4, 5}};
  const auto pts = sample_surface(m, 4000, 3);
  std::size_t second = 0;
  for (const auto& p : pts) {
    CHECK(p.z() == 0.0);
    if (p.x() >= 2.0) {
      ++second;
      CHECK(p.y() <= (2.0 / 3.0) * (5.0 - p.x()) + 1e-12);
    } else {
      CHECK(p.x() + p.y() <= 1.0 + 1e-12);
    }
  }
  CHECK(std::abs(second / 4000.0 - 6.0 / 7.0) < 0.03);
  CHECK(pts == sample_surface(m, 4000, 3));
  CHECK_THROWS_AS(sample_surface(geometry::Mesh{}, 10, 1), GeometryError);
}

TEST_CASE("metrics report json round trip") {
  MetricsReport r{1.5, 2.5, 70.0, 0.0015, 0.025, false, 2048, 64};
  const auto back = metrics_from_json(metrics_to_json(r));
  CHECK(back.cd == 1.5);
  CHECK(back.emd == 2.5);
  CHECK(back.iou == 70.0);
  CHECK_FALSE(back.emd_exact);
  CHECK(back.point_count == 2048);
  CHECK(back.voxel_res == 64);
}

TEST_CASE("identical meshes score perfect metrics") {
  using namespace geometry;
  const SdfScene scene(make_sphere({0.1, 0, 0}, 0.5));
  const Mesh mesh = marching_cubes(pad_grid(sample_grid(scene, {33, 33, 33}), 1.0));
  const auto report = compute_metrics(mesh, mesh, solid_voxelize(mesh, 32), {512, 32, 5});
  CHECK(report.iou == 100.0);
  CHECK(report.cd == 0.0);
  CHECK(report.emd == 0.0);
  CHECK(report.point_count == 512);
  CHECK(report.voxel_res == 32);
}

TEST_CASE("pattern offset statistics") {
  using model::PatternKind;
  model::ModelConfig cfg = model::ModelConfig::mini();
  const auto probes = cloud(200, 6);
  SUBCASE("zero-initialized generator") {
    const auto means = pattern_offset_stats(model::SdfModel<float>(cfg), probes);
    CHECK(means.size() == 6);
    for (double m : means) CHECK(m == 0.0);
  }
  SUBCASE("rigid pattern") {
    cfg.pattern.kind = PatternKind::Rigid3;
    cfg.generator_output_init = 1.0;
    const auto means = pattern_offset_stats(model::SdfModel<float>(cfg), probes);
    CHECK(means.size() == 3);
    for (double m : means) CHECK(m == 0.0);
  }
  SUBCASE("active generator stays within the tanh bound") {
    cfg.generator_output_init = 3.0;
    const auto means = pattern_offset_stats(model::SdfModel<double>(cfg), probes);
    for (double m : means) {
      CHECK(m > 0.0);
      CHECK(m < std::sqrt(3.0));
    }
    const auto path = std::filesystem::temp_directory_path() / "psdf_stats_test.csv";
    write_pattern_stats_csv(means, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "pattern_index,mean_offset");
    int rows = 0;
    while (std::getline(in, line)) {
      CHECK(line.rfind(std::to_string(rows + 1) + ",", 0) == 0);
      ++rows;
    }
    CHECK(rows == 6);
    std::filesystem::remove(path);
    CHECK(format_pattern_stats(means).find("p6") != std::string::npos);
  }
}
