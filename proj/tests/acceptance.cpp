// Acceptance runner: one PASS/FAIL line per criterion.

#include "psdf/allocator.hpp"
#include "psdf/camera/camera.hpp"
#include "psdf/error.hpp"
#include "psdf/eval/metrics.hpp"
#include "psdf/eval/pattern_stats.hpp"
#include "psdf/geometry/grid.hpp"
#include "psdf/geometry/mesh.hpp"
#include "psdf/geometry/scene.hpp"
#include "psdf/geometry/voxelize.hpp"
#include "psdf/model/model.hpp"
#include "psdf/nn/checkpoint.hpp"
#include "psdf/nn/gradcheck.hpp"
#include "psdf/nn/loss.hpp"
#include "psdf/pipeline/dataset.hpp"
#include "psdf/pipeline/reconstruct.hpp"
#include "psdf/pipeline/scenes.hpp"
#include "psdf/pipeline/train.hpp"
#include "psdf/rng.hpp"
#include "psdf/sampling/sampling.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace psdf;
using geometry::Vec3;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vec3 random_point(CounterRng& rng, double r) { return {rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)}; }

// ---------------------------------------------------------------------------
// 1. Gradient suite

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  bool pass = true;
  double worst_op = 0.0, worst_model = 0.0;
  for (const auto& r : nn::run_op_gradchecks(7)) {
    pass = pass && r.passed && r.max_rel_error < 1e-4;
    worst_op = std::max(worst_op, r.max_rel_error);
  }
  for (auto kind : {model::PatternKind::Uniform6, model::PatternKind::NonUniform6, model::PatternKind::NonUniform3,
                    model::PatternKind::Rigid3}) {
    const auto r = model::check_model_gradients(kind, 7);
    pass = pass && r.passed && r.max_rel_error < 1e-4;
    worst_model = std::max(worst_model, r.max_rel_error);
  }
  const double secs = seconds_since(start);
  pass = pass && secs < 120.0;
  return {pass, "ops max rel err " + fmt("%.2e", worst_op) + ", model max rel err " + fmt("%.2e", worst_model) +
                    ", " + fmt("%.1f", secs) + " s (limit 120 s)"};
}

// ---------------------------------------------------------------------------
// 2. Pattern formulas, written out independently of the model code.

std::vector<Vec3> pattern_oracle(model::PatternKind kind, const Vec3& p) {
  const double x = p.x(), y = p.y(), z = p.z();
  switch (kind) {
    case model::PatternKind::Uniform6:
      return {{x, y, z + 0.1}, {x + 0.1, y, z}, {x, y + 0.1, z}, {x, y, z - 0.1}, {x - 0.1, y, z}, {x, y - 0.1, z}};
    case model::PatternKind::NonUniform6:
      return {{x, y, -z}, {-x, y, z}, {x, -y, z}, {-x, -y, z}, {x, -y, -z}, {-x, y, -z}};
    case model::PatternKind::NonUniform3:
      return {{x, y, -z}, {-x, y, z}, {x, -y, z}};
    case model::PatternKind::Rigid3:
      return {{x, y, -z}, {-x, y, z}, {-x, y, -z}};
    case model::PatternKind::None:
      return {};
  }
  return {};
}

Outcome pattern_conformance() {
  CounterRng rng(2, 1000);
  std::size_t compared = 0, mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = random_point(rng, 0.9);
    for (auto kind : {model::PatternKind::Uniform6, model::PatternKind::NonUniform6, model::PatternKind::NonUniform3,
                      model::PatternKind::Rigid3}) {
      const auto got = model::init_pattern(p, {kind, 0.2});
      const auto want = pattern_oracle(kind, p);
      if (got.size() != want.size()) {
        ++mismatched;
        continue;
      }
      for (std::size_t k = 0; k < got.size(); ++k) {
        ++compared;
        if (got[k] != want[k]) ++mismatched;
      }
    }
  }
  return {mismatched == 0 && compared == 18000,
          std::to_string(compared) + " points compared over 1000 queries, " + std::to_string(mismatched) +
              " mismatches (tolerance 0)"};
}

// ---------------------------------------------------------------------------
// 3. Camera

Outcome camera_conformance() {
  CounterRng rng(3, 1000);
  double worst = 0.0;
  int reset_bad = 0, resets = 0;
  for (int i = 0; i < 1000; ++i) {
    Vec3 eye = random_point(rng, 3.0);
    if (eye.norm() < 2.5) eye = eye.normalized() * 2.5 + Vec3(0.05, 0.1, 0.15);
    const auto pose = camera::look_at(eye, random_point(rng, 0.2), Vec3::UnitY(), rng.uniform(60, 200));
    const Vec3 p = random_point(rng, 1.0);
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = k(1, 1) = pose.focal;
    k(0, 2) = pose.principal.x();
    k(1, 2) = pose.principal.y();
    const Eigen::Matrix<double, 3, 4> rt = pose.transform.topRows<3>();
    const Eigen::Vector3d h = k * (rt * p.homogeneous());
    const camera::Vec2 raw = camera::project_unclamped(pose, p);
    worst = std::max({worst, std::abs(raw.x() - h.x() / h.z()), std::abs(raw.y() - h.y() / h.z())});

    // Pixels pushed outside the image land exactly on the border.
    const camera::Vec2 out(rng.uniform(-300, 436), rng.uniform(-300, 436));
    const camera::Vec2 r = camera::reset_to_image(pose, out);
    for (int a = 0; a < 2; ++a) {
      if (out[a] < 0.0 || out[a] > 136.0) {
        ++resets;
        if (r[a] != (out[a] < 0.0 ? 0.0 : 136.0)) ++reset_bad;
      } else if (r[a] != out[a]) {
        ++reset_bad;
      }
    }
  }
  return {worst <= 1e-9 && reset_bad == 0,
          "max |projection - K[R|t]p| " + fmt("%.2e", worst) + " px (limit 1e-9); " + std::to_string(resets) +
              " out-of-bounds coordinates, " + std::to_string(reset_bad) + " not on 0/136"};
}

// ---------------------------------------------------------------------------
// 4. Sampling

std::vector<std::size_t> greedy_fps_oracle(const std::vector<Vec3>& pts, std::size_t k) {
  std::vector<std::size_t> chosen{0};
  while (chosen.size() < k) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) d = std::min(d, (pts[i] - pts[c]).norm());
      if (d > best) {
        best = d;
        arg = i;
      }
    }
    chosen.push_back(arg);
  }
  return chosen;
}

Outcome sampling_conformance() {
  bool pass = true;
  std::size_t checked = 0;
  for (const auto& name : pipeline::scene_template_names()) {
    const auto scene = pipeline::make_template_scene(name, 1);
    const auto pts = sampling::band_sample(scene, 32768, 1);
    std::array<std::size_t, 4> counts{};
    for (const auto& s : pts) {
      const double d = geometry::eval_sdf(scene, s.position);
      const int band = sampling::band_of(d);
      if (band < 0 || d != s.sdf) {
        pass = false;
        continue;
      }
      ++counts[static_cast<std::size_t>(band)];
      ++checked;
    }
    for (auto c : counts) pass = pass && c == 8192;
  }
  int fps_bad = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    CounterRng rng(seed, 44);
    const std::size_t n = 4 + (seed * 7) % 61;
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = random_point(rng, 1.0);
    const std::size_t k = 1 + seed % n;
    if (sampling::farthest_point_sample(pts, k) != greedy_fps_oracle(pts, k)) ++fps_bad;
  }
  pass = pass && fps_bad == 0;
  return {pass, std::to_string(checked) + " band samples over 8 scenes verified (8192 per band each); FPS " +
                    std::to_string(30 - fps_bad) + "/30 instances match the greedy oracle"};
}

// ---------------------------------------------------------------------------
// 5. Metrics

double chamfer_oracle(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto one = [](const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    double s = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, (p - q).squaredNorm());
      s += best;
    }
    return s / static_cast<double>(x.size());
  };
  return one(a, b) + one(b, a);
}

std::vector<Vec3> cloud(std::size_t n, CounterRng& rng) {
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = random_point(rng, 1.0);
  return pts;
}

Outcome metric_oracles() {
  CounterRng rng(5, 5);
  int cd_bad = 0;
  for (int t = 0; t < 20; ++t) {
    const auto a = cloud(1 + (t * 13) % 64, rng), b = cloud(1 + (t * 29) % 64, rng);
    if (eval::chamfer(a, b) != chamfer_oracle(a, b)) ++cd_bad;
  }
  double worst_emd = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto a = cloud(256, rng), b = cloud(256, rng);
    const double exact = eval::emd(a, b, eval::EmdMode::Exact).value;
    const double approx = eval::emd(a, b, eval::EmdMode::Approx).value;
    worst_emd = std::max(worst_emd, std::abs(approx - exact) / exact);
  }
  const geometry::SdfScene ca(geometry::make_box({-0.25, 0, 0}, Vec3::Constant(0.5)));
  const geometry::SdfScene cb(geometry::make_box({0.25, 0, 0}, Vec3::Constant(0.5)));
  const double cube_iou = eval::iou(geometry::solid_voxelize(ca, 64), geometry::solid_voxelize(cb, 64));
  const double grown = 1.0 + 2.0 / 32.0, shrunk = 1.0 - 2.0 / 32.0;
  const bool cube_ok = cube_iou >= 100.0 * (shrunk - 0.5) / (shrunk + 0.5) &&
                       cube_iou <= 100.0 * (grown - 0.5) / (grown + 0.5);

  const geometry::SdfScene sphere(geometry::make_sphere(Vec3::Zero(), 0.5));
  const auto mesh = geometry::marching_cubes(geometry::pad_grid(geometry::sample_grid(sphere, {33, 33, 33}), 1.0));
  const auto self = eval::compute_metrics(mesh, mesh, geometry::solid_voxelize(mesh, 64));
  const bool identity = self.cd == 0.0 && self.emd == 0.0 && self.iou == 100.0;

  return {cd_bad == 0 && worst_emd <= 0.02 && cube_ok && identity,
          "CD exact on " + std::to_string(20 - cd_bad) + "/20 instances; EMD approx worst rel gap " +
              fmt("%.3f%%", 100.0 * worst_emd) + " (limit 2%); half-offset cubes IoU " + fmt("%.3f", cube_iou) +
              "; identity (" + fmt("%g", self.cd) + ", " + fmt("%g", self.emd) + ", " + fmt("%g", self.iou) + ")"};
}

// ---------------------------------------------------------------------------
// 6. Geometry

Outcome geometry_oracle() {
  const geometry::SdfScene sphere(geometry::make_sphere(Vec3::Zero(), 0.5));
  const auto grid = geometry::sample_grid(sphere, {65, 65, 65});
  const auto mesh = geometry::marching_cubes(grid);
  const double spacing = 2.0 / 64.0;
  double worst = 0.0;
  for (const auto& v : mesh.vertices) worst = std::max(worst, std::abs(v.norm() - 0.5));
  const double analytic = (4.0 / 3.0) * M_PI * 0.125 / 8.0;
  const double scene_frac = geometry::solid_voxelize(sphere, 32).occupied_fraction();
  const double mesh_frac = geometry::solid_voxelize(mesh, 32).occupied_fraction();
  const bool pass = !mesh.empty() && worst <= 2.0 * spacing && std::abs(scene_frac - analytic) <= 0.005 &&
                    std::abs(mesh_frac - analytic) <= 0.005;
  return {pass, "MC vertices max radial error " + fmt("%.5f", worst) + " (limit " + fmt("%.5f", 2 * spacing) +
                    "); occupancy at 32^3: scene " + fmt("%.4f", scene_frac) + ", mesh " + fmt("%.4f", mesh_frac) +
                    " vs " + fmt("%.4f", analytic) + " +- 0.005"};
}

// ---------------------------------------------------------------------------
// 7. Loss

Outcome loss_conformance() {
  const nn::LossConfig cfg;
  const double p1[] = {0.05}, g1[] = {0.005};
  const double p2[] = {0.95}, g2[] = {0.5};
  const double a = nn::weighted_sdf_loss(p1, g1, cfg);
  const double b = nn::weighted_sdf_loss(p2, g2, cfg);
  const double c = nn::weighted_sdf_loss(g2, g2, cfg);
  const bool pass = cfg.omega1 == 4.0 && cfg.omega2 == 1.0 && cfg.delta == 0.01 && a == 4.0 * (0.05 - 0.005) &&
                    b == 1.0 * (0.95 - 0.5) && c == 0.0;
  return {pass, "examples give " + fmt("%.17g", a) + ", " + fmt("%.17g", b) + ", " + fmt("%g", c) +
                    " (expected 4*0.045, 0.45, 0)"};
}

// ---------------------------------------------------------------------------
// 8-10. Training runs

struct RunSettings {
  int epochs = 150;
  double lr = 1e-3;
  int batch_size = 1;
  int points_per_step = 2048;
  double sdf_output_init = 0.1;
};

pipeline::TrainConfig overfit_config(model::PatternKind kind, const RunSettings& s) {
  pipeline::TrainConfig cfg;
  cfg.epochs = s.epochs;
  cfg.lr = s.lr;
  cfg.batch_size = s.batch_size;
  cfg.points_per_step = s.points_per_step;
  cfg.seed = 1;
  cfg.model = model::ModelConfig::mini();
  cfg.model.pattern.kind = kind;
  cfg.model.sdf_output_init = s.sdf_output_init;
  return cfg;
}

struct RunRecord {
  bool completed = false;
  std::string error;
  std::vector<double> epoch_losses;
  pipeline::EvaluationSummary summary;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  fs::path checkpoint;
};

RunRecord overfit_run(const std::vector<pipeline::TrainSample>& data, model::PatternKind kind,
                      const RunSettings& settings, const fs::path& dir) {
  RunRecord rec;
  try {
    fs::create_directories(dir);
    std::ofstream log(dir / "train.log");
    auto start = std::chrono::steady_clock::now();
    const auto result = pipeline::train(data, overfit_config(kind, settings), dir, &log);
    rec.train_seconds = seconds_since(start);
    for (const auto& e : result.epochs) rec.epoch_losses.push_back(e.mean_loss);
    rec.checkpoint = dir / "checkpoint";

    start = std::chrono::steady_clock::now();
    const auto net = pipeline::load_model<float>(rec.checkpoint);
    pipeline::EvaluateOptions opts;
    opts.mesh_dir = dir / "meshes";
    rec.summary = pipeline::evaluate(net, data, opts, &log);
    rec.eval_seconds = seconds_since(start);
    std::ofstream(dir / "metrics.json") << pipeline::summary_to_json(rec.summary).dump(2) << '\n';
    rec.completed = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

Outcome overfit_outcome(const RunRecord& rec, const RunSettings& settings) {
  if (!rec.completed) return {false, "run failed: " + rec.error};
  std::string detail;
  bool pass = true;
  if (rec.epoch_losses.size() < 50) {
    pass = false;
    detail += "fewer than 50 epochs; ";
  } else {
    const double first = rec.epoch_losses[0], fiftieth = rec.epoch_losses[49];
    pass = pass && fiftieth < first;
    detail += "epoch loss 1 -> 50: " + fmt("%.5f", first) + " -> " + fmt("%.5f", fiftieth) + "; final " +
              fmt("%.5f", rec.epoch_losses.back()) + "; ";
  }
  double min_iou = 100.0;
  for (const auto& s : rec.summary.samples) min_iou = std::min(min_iou, s.report.iou);
  const double mean_iou = rec.summary.mean.iou;
  pass = pass && rec.summary.empty_count == 0 && mean_iou >= 70.0;
  const double total = rec.train_seconds + rec.eval_seconds;
  pass = pass && total <= 1800.0;
  detail += "mean IoU " + fmt("%.1f", mean_iou) + "% over " + std::to_string(rec.summary.samples.size()) +
            " views (min " + fmt("%.1f", min_iou) + "%), empty " + std::to_string(rec.summary.empty_count) + "; " +
            std::to_string(settings.epochs) + " epochs, train " + fmt("%.0f", rec.train_seconds) + " s + eval " +
            fmt("%.0f", rec.eval_seconds) + " s (limit 1800 s)";
  return {pass, detail};
}

std::vector<Vec3> dataset_points(const std::vector<pipeline::TrainSample>& data) {
  std::vector<Vec3> probes;
  std::set<const sampling::SampleSet*> seen;
  for (const auto& d : data) {
    if (!seen.insert(d.samples.get()).second) continue;
    for (const auto& p : d.samples->points) probes.push_back(p.position);
  }
  return probes;
}

Outcome ablation_outcome(const std::map<model::PatternKind, RunRecord>& runs,
                         const std::vector<pipeline::TrainSample>& data) {
  bool pass = true;
  std::string detail;
  const auto probes = dataset_points(data);
  const auto grid = sampling::test_grid(pipeline::kTestGridRes);
  for (const auto& [kind, rec] : runs) {
    const std::string name = model::pattern_kind_name(kind);
    if (!rec.completed) {
      pass = false;
      detail += name + " failed (" + rec.error + "); ";
      continue;
    }
    detail += name + " IoU " + fmt("%.1f", rec.summary.mean.iou);
    const auto manifest = nn::read_checkpoint_manifest(rec.checkpoint.string());
    const bool has_generator = manifest.has_tensor_prefix("generator.");
    const auto net = pipeline::load_model<float>(rec.checkpoint);
    if (kind == model::PatternKind::Rigid3) {
      const auto stats = eval::pattern_offset_stats(net, probes);
      const bool zero = std::all_of(stats.begin(), stats.end(), [](double m) { return m == 0.0; });
      pass = pass && !has_generator && zero && stats.size() == 3;
      detail += std::string(has_generator ? ", generator tensors present" : ", no generator tensors") +
                (zero ? ", offsets all zero" : ", nonzero offsets");
    } else {
      const auto offsets = net.pattern_offsets(grid);
      double worst = 0.0;
      for (const auto& o : offsets) worst = std::max(worst, o.cwiseAbs().maxCoeff());
      pass = pass && has_generator && worst < 1.0;
      detail += ", max |offset| " + fmt("%.4f", worst);
    }
    detail += "; ";
  }
  if (runs.size() != 4) pass = false;
  if (detail.size() >= 2) detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome determinism(const std::vector<pipeline::TrainSample>& data, const fs::path& dir) {
  pipeline::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 1e-3;
  cfg.seed = 10;
  cfg.precision = pipeline::Precision::Float64;
  const fs::path a = dir / "run_a", b = dir / "run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  pipeline::train(data, cfg, a);
  pipeline::train(data, cfg, b);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  const std::string la = slurp(a / "loss.csv"), lb = slurp(b / "loss.csv");
  const auto lines = std::count(la.begin(), la.end(), '\n');
  const bool same = !la.empty() && la == lb;
  return {same && lines > 1, "two float64 runs, " + std::to_string(lines - 1) + " logged steps each, loss logs " +
                                 (same ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  CLI::App app{"psdf acceptance checks"};
  std::string work = (fs::temp_directory_path() / "psdf_acceptance").string();
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for datasets and training runs");
  app.add_option("--only", only, "Run only these criteria (1-10)")->check(CLI::Range(1, 10));
  RunSettings settings;
  app.add_option("--epochs", settings.epochs, "Epochs per overfit run (smoke runs only; criterion 8 needs 50+)")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const fs::path root(work);
  fs::create_directories(root);

  int failures = 0, ran = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    ++ran;
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("%s [%d] %s: %s\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient suite", gradient_suite);
  report(2, "pattern formula conformance", pattern_conformance);
  report(3, "camera conformance", camera_conformance);
  report(4, "sampling conformance", sampling_conformance);
  report(5, "metric oracles", metric_oracles);
  report(6, "geometry oracle", geometry_oracle);
  report(7, "loss conformance", loss_conformance);

  if (wanted(8) || wanted(9) || wanted(10)) {
    const fs::path data_dir = root / "data";
    std::vector<pipeline::TrainSample> data;
    try {
      fs::remove_all(data_dir);
      pipeline::generate_dataset(pipeline::DatasetConfig{}, data_dir);
      data = pipeline::load_dataset(data_dir);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "dataset generation failed: %s\n", e.what());
    }
    std::map<model::PatternKind, RunRecord> runs;
    if (wanted(8) || wanted(9)) {
      runs[model::PatternKind::NonUniform6] =
          overfit_run(data, model::PatternKind::NonUniform6, settings, root / "nonuniform6");
    }
    report(8, "overfit experiment", [&] { return overfit_outcome(runs.at(model::PatternKind::NonUniform6), settings); });
    if (wanted(9)) {
      for (auto kind : {model::PatternKind::Uniform6, model::PatternKind::NonUniform3, model::PatternKind::Rigid3}) {
        runs[kind] = overfit_run(data, kind, settings, root / model::pattern_kind_name(kind));
      }
    }
    report(9, "ablation isolation", [&] { return ablation_outcome(runs, data); });
    report(10, "determinism", [&] { return determinism(data, root / "determinism"); });
  }

  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
