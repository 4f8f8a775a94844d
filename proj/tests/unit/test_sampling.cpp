#include "psdf/error.hpp"
#include "psdf/geometry/scene.hpp"
#include "psdf/rng.hpp"
#include "psdf/sampling/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <set>

using namespace psdf;
using namespace psdf::geometry;
using namespace psdf::sampling;

namespace {

// Plain greedy max-min selection recomputing every distance from scratch.
std::vector<std::size_t> greedy_oracle(const std::vector<Vec3>& pts, std::size_t k) {
  std::vector<std::size_t> chosen{0};
  while (chosen.size() < k) {
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) d = std::min(d, (pts[i] - pts[c]).norm());
      if (d > best) {
        best = d;
        best_i = i;
      }
    }
    chosen.push_back(best_i);
  }
  return chosen;
}

}  // namespace

TEST_CASE("band membership") {
  CHECK(band_of(-0.10) == 0);
  CHECK(band_of(-0.05) == 0);
  CHECK(band_of(-0.03) == 1);
  CHECK(band_of(0.0) == 2);
  CHECK(band_of(0.03) == 3);
  CHECK(band_of(0.10) == 3);
  CHECK(band_of(0.1000001) == -1);
  CHECK(band_of(-0.2) == -1);
}

TEST_CASE("band sampling fills each band equally") {
  const SdfScene sphere(make_sphere(Vec3::Zero(), 0.5));
  const auto pts = band_sample(sphere, 32768, 11);
  REQUIRE(pts.size() == 32768);
  std::array<int, 4> counts{};
  for (const auto& s : pts) {
    const int b = band_of(s.sdf);
    REQUIRE(b >= 0);
    ++counts[b];
    CHECK(s.sdf == eval_sdf(sphere, s.position));
    CHECK(s.position.cwiseAbs().maxCoeff() <= 1.0);
    if (b == 2) {
      CHECK(s.position.norm() >= 0.5 - 1e-12);
      CHECK(s.position.norm() <= 0.53 + 1e-12);
    }
  }
  for (int c : counts) CHECK(c == 8192);
}

TEST_CASE("band sampling is deterministic per seed") {
  const SdfScene scene(make_box(Vec3::Zero(), {0.4, 0.3, 0.2}));
  const auto a = band_sample(scene, 400, 5);
  const auto b = band_sample(scene, 400, 5);
  const auto c = band_sample(scene, 400, 6);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position == b[i].position);
    CHECK(a[i].sdf == b[i].sdf);
  }
  CHECK(a[0].position != c[0].position);
}

TEST_CASE("band sampling errors") {
  const SdfScene sphere(make_sphere(Vec3::Zero(), 0.5));
  CHECK_THROWS_AS(band_sample(sphere, 10, 1), DataError);
  // A sliver thinner than the inner band can never produce sdf <= -0.03.
  const SdfScene thin(make_box(Vec3::Zero(), {0.5, 0.5, 0.01}));
  try {
    band_sample(thin, 8, 1, {.budget_factor = 50});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("-0.1") != std::string::npos);
  }
}

TEST_CASE("grid-restricted band sampling lands on lattice nodes") {
  const SdfScene sphere(make_sphere(Vec3::Zero(), 0.5));
  const auto pts = band_sample(sphere, 64, 3, {.grid_res = 65});
  for (const auto& s : pts) {
    for (int a = 0; a < 3; ++a) {
      const double k = (s.position[a] + 1.0) * 32.0;
      CHECK(k == doctest::Approx(std::round(k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("farthest point sampling examples") {
  const std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {9, 0, 0}};
  const auto two = farthest_point_sample(line, 2);
  CHECK(two == std::vector<std::size_t>{0, 3});
  const auto all = farthest_point_sample(line, 4);
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 4);
  CHECK_THROWS_AS(farthest_point_sample(line, 5), DataError);
  CHECK(farthest_point_sample(line, 2, 3) == std::vector<std::size_t>{3, 0});
}

TEST_CASE("farthest point sampling matches the brute-force greedy oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CounterRng rng(seed, 4);
    const std::size_t n = 8 + seed * 2;
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const std::size_t k = n / 2;
    CAPTURE(seed);
    CHECK(farthest_point_sample(pts, k) == greedy_oracle(pts, k));
  }
}

TEST_CASE("sample_scene output is a subset of stage one") {
  const SdfScene scene(make_union({make_sphere({0.3, 0, 0}, 0.4), make_box({-0.3, 0, 0}, {0.25, 0.3, 0.2})}));
  const auto set = sample_scene(scene, 9, 2048, 256);
  REQUIRE(set.points.size() == 256);
  const auto stage1 = band_sample(scene, 2048, 9);
  for (const auto& p : set.points) {
    const bool found = std::any_of(stage1.begin(), stage1.end(), [&](const PointSample& q) {
      return q.position == p.position && q.sdf == p.sdf;
    });
    CHECK(found);
    CHECK(p.sdf == eval_sdf(scene, p.position));
  }
}

TEST_CASE("test grid layout") {
  const auto g = test_grid();
  REQUIRE(g.size() == 274625);
  CHECK(g.front() == Vec3(-1, -1, -1));
  CHECK(g.back() == Vec3(1, 1, 1));
  CHECK(g[1].x() - g[0].x() == 2.0 / 64.0);
  CHECK(g[65] == Vec3(-1, -1 + 2.0 / 64.0, -1));
  const auto corners = test_grid(2);
  REQUIRE(corners.size() == 8);
  for (const auto& c : corners) CHECK(c.cwiseAbs() == Vec3(1, 1, 1));
  CHECK_THROWS_AS(test_grid(1), DataError);
}

TEST_CASE("sample set file round trip") {
  const SdfScene sphere(make_sphere(Vec3::Zero(), 0.5));
  const auto set = sample_scene(sphere, 2, 256, 64);
  const auto path = std::filesystem::temp_directory_path() / "psdf_samples_test.bin";
  save_sample_set(set, path.string());
  const auto back = load_sample_set(path.string());
  REQUIRE(back.points.size() == set.points.size());
  CHECK(back.stage1_count == 256);
  CHECK(back.stage2_count == 64);
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    CHECK(back.points[i].position.x() == static_cast<float>(set.points[i].position.x()));
    CHECK(back.points[i].sdf == static_cast<float>(set.points[i].sdf));
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_sample_set("/nonexistent/samples.bin"), DataError);
}
