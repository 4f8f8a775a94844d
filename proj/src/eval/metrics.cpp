#include "psdf/eval/metrics.hpp"

#include "psdf/error.hpp"
#include "psdf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace psdf::eval {
namespace {

double directed_mean_sq(std::span<const Vec3> from, std::span<const Vec3> to) {
  double total = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, (p - q).squaredNorm());
    total += best;
  }
  return total / static_cast<double>(from.size());
}

std::vector<double> cost_matrix(std::span<const Vec3> a, std::span<const Vec3> b) {
  const std::size_t n = a.size();
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = (a[i] - b[j]).norm();
  }
  return c;
}

// Shortest augmenting path Hungarian method with row and column potentials.
std::vector<int> hungarian(const std::vector<double>& c, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> owner(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j) assignment[owner[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

// Lower bound on the optimal assignment cost from column prices: for any
// prices p, sum_i min_j (c_ij + p_j) - sum_j p_j <= optimum.
double dual_bound(const std::vector<double>& c, std::size_t n, const std::vector<double>& prices) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) best = std::min(best, c[i * n + j] + prices[j]);
    total += best;
  }
  for (double p : prices) total -= p;
  return total;
}

double assignment_cost(const std::vector<double>& c, std::size_t n, const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += c[i * n + static_cast<std::size_t>(assignment[i])];
  return total;
}

// Forward auction on costs with epsilon scaling. Prices here are the
// amounts persons pay on top of the cost, so bids minimise c_ij + p_j.
EmdResult auction(const std::vector<double>& c, std::size_t n, const AuctionOptions& options) {
  double max_cost = 0.0;
  double row_min_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      max_cost = std::max(max_cost, c[i * n + j]);
      row_min = std::min(row_min, c[i * n + j]);
    }
    row_min_sum += row_min;
  }
  std::vector<double> prices(n, 0.0);
  std::vector<int> person_of(n, -1), object_of(n, -1);
  // An epsilon-complementary assignment is within n * eps of the optimum.
  const double target = std::max(options.relative_gap * row_min_sum, 1e-12 * std::max(max_cost, 1.0) * n);
  double eps = std::max(max_cost / 4.0, target / n);
  double best_bound = row_min_sum;
  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  while (true) {
    std::fill(person_of.begin(), person_of.end(), -1);
    std::fill(object_of.begin(), object_of.end(), -1);
    std::vector<int> queue(n);
    std::iota(queue.begin(), queue.end(), 0);
    while (!queue.empty()) {
      const int i = queue.back();
      queue.pop_back();
      const double* row = c.data() + static_cast<std::size_t>(i) * n;
      double first = std::numeric_limits<double>::infinity(), second = first;
      std::size_t pick = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = row[j] + prices[j];
        if (value < first) {
          second = first;
          first = value;
          pick = j;
        } else if (value < second) {
          second = value;
        }
      }
      if (n == 1) second = first;
      prices[pick] += (second - first) + eps;
      if (person_of[pick] >= 0) {
        object_of[static_cast<std::size_t>(person_of[pick])] = -1;
        queue.push_back(person_of[pick]);
      }
      person_of[pick] = i;
      object_of[static_cast<std::size_t>(i)] = static_cast<int>(pick);
    }
    const double cost = assignment_cost(c, n, object_of);
    best_bound = std::max(best_bound, dual_bound(c, n, prices));
    if (cost < best_cost) {
      best_cost = cost;
      best = object_of;
    }
    if (best_cost - best_bound <= options.relative_gap * best_bound || eps * n <= target) break;
    eps = std::max(eps / 5.0, target / n);
  }
  EmdResult result;
  result.value = best_cost / static_cast<double>(n);
  result.lower_bound = std::min(best_bound, best_cost) / static_cast<double>(n);
  result.exact = false;
  result.assignment = std::move(best);
  return result;
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw DataError("chamfer: point sets must not be empty");
  return directed_mean_sq(a, b) + directed_mean_sq(b, a);
}

EmdResult emd(std::span<const Vec3> a, std::span<const Vec3> b, EmdMode mode, const AuctionOptions& options) {
  if (a.size() != b.size()) {
    throw DataError("emd: point sets differ in size (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                    ")");
  }
  const std::size_t n = a.size();
  if (n == 0) return {0.0, 0.0, true, {}};
  const auto c = cost_matrix(a, b);
  if (mode == EmdMode::Approx || (mode == EmdMode::Auto && n > kEmdExactLimit)) return auction(c, n, options);
  EmdResult result;
  result.assignment = hungarian(c, n);
  result.value = assignment_cost(c, n, result.assignment) / static_cast<double>(n);
  result.lower_bound = result.value;
  result.exact = true;
  return result;
}

double iou(const geometry::OccupancyGrid& a, const geometry::OccupancyGrid& b) {
  if (a.resolution != b.resolution || a.cells.size() != b.cells.size() || a.lo != b.lo || a.hi != b.hi) {
    throw DataError("iou: occupancy grids differ in resolution or bounds (" + std::to_string(a.resolution) + " vs " +
                    std::to_string(b.resolution) + ")");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const bool x = a.cells[i] != 0, y = b.cells[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 100.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Vec3> sample_surface(const geometry::Mesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& p0 = mesh.vertices[t[0]];
    total += 0.5 * (mesh.vertices[t[1]] - p0).cross(mesh.vertices[t[2]] - p0).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw GeometryError("sample_surface: mesh has no area");
  CounterRng rng(seed, 0x73757266);
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double pick = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t tri = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
    const auto& t = mesh.triangles[tri];
    const double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
    out.push_back((1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                  r1 * r2 * mesh.vertices[t[2]]);
  }
  return out;
}

nlohmann::json metrics_to_json(const MetricsReport& r) {
  return {{"cd", r.cd},
          {"emd", r.emd},
          {"iou", r.iou},
          {"cd_raw", r.cd_raw},
          {"emd_raw", r.emd_raw},
          {"emd_mode", r.emd_exact ? "exact" : "approx"},
          {"point_count", r.point_count},
          {"voxel_res", r.voxel_res}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.cd = j.at("cd").get<double>();
    r.emd = j.at("emd").get<double>();
    r.iou = j.at("iou").get<double>();
    r.cd_raw = j.value("cd_raw", r.cd / 1000.0);
    r.emd_raw = j.value("emd_raw", r.emd / 100.0);
    r.emd_exact = j.value("emd_mode", std::string("exact")) == "exact";
    r.point_count = j.at("point_count").get<std::size_t>();
    r.voxel_res = j.at("voxel_res").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics: ") + e.what());
  }
}

MetricsReport compute_metrics(const geometry::Mesh& predicted, const geometry::Mesh& reference,
                              const geometry::OccupancyGrid& reference_occupancy, const MetricsOptions& options) {
  MetricsReport r;
  r.point_count = options.point_count;
  r.voxel_res = options.voxel_res;
  const auto pred_occ =
      geometry::solid_voxelize(predicted, options.voxel_res, reference_occupancy.lo, reference_occupancy.hi);
  r.iou = iou(pred_occ, reference_occupancy);
  const auto a = sample_surface(predicted, options.point_count, options.seed);
  const auto b = sample_surface(reference, options.point_count, options.seed);
  r.cd_raw = chamfer(a, b);
  const auto e = emd(a, b);
  r.emd_raw = e.value;
  r.emd_exact = e.exact;
  r.cd = 1000.0 * r.cd_raw;
  r.emd = 100.0 * r.emd_raw;
  return r;
}

}  // namespace psdf::eval
