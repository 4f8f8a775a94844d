#include "psdf/allocator.hpp"
#include "psdf/error.hpp"
#include "psdf/eval/pattern_stats.hpp"
#include "psdf/model/model.hpp"
#include "psdf/nn/gradcheck.hpp"
#include "psdf/pipeline/dataset.hpp"
#include "psdf/pipeline/reconstruct.hpp"
#include "psdf/pipeline/train.hpp"
#include "psdf/sampling/sampling.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace psdf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Runs `fn` with the checkpoint's model in its stored precision.
template <typename Fn>
void with_model(const std::string& dir, Fn&& fn) {
  if (pipeline::checkpoint_dtype(dir) == "float64") {
    fn(pipeline::load_model<double>(dir));
  } else {
    fn(pipeline::load_model<float>(dir));
  }
}

struct DatasetArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  int scenes = 0, views = 0;
};

struct TrainArgs {
  std::string data, config, out, pattern, precision;
  std::uint64_t seed = 0;
  int epochs = 0;
  double lr = 0.0;
};

struct ReconstructArgs {
  std::string checkpoint, image, camera, out;
  int res = pipeline::kTestGridRes;
};

struct EvalArgs {
  std::string checkpoint, data, out, meshes;
  std::size_t limit = 0;
  int res = pipeline::kTestGridRes;
};

struct StatsArgs {
  std::string checkpoint, data, out;
  int grid = 17;
};

struct GradArgs {
  std::uint64_t seed = 7;
};

int run_dataset(const DatasetArgs& a, const CLI::App& cmd) {
  pipeline::DatasetConfig cfg;
  if (!a.config.empty()) cfg = pipeline::dataset_config_from_json(read_json(a.config));
  if (cmd.count("--seed")) cfg.seed = a.seed;
  if (cmd.count("--scenes")) cfg.scenes = a.scenes;
  if (cmd.count("--views")) cfg.views = a.views;
  const auto manifest = pipeline::generate_dataset(cfg, a.out, &std::cerr);
  std::size_t views = 0;
  for (const auto& s : manifest.scenes) views += s.views.size();
  std::printf("%zu scenes, %zu training samples written to %s (%zu skipped)\n", manifest.scenes.size(), views,
              a.out.c_str(), manifest.skipped.size());
  return kOk;
}

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  pipeline::TrainConfig cfg;
  if (!a.config.empty()) cfg = pipeline::train_config_from_json(read_json(a.config));
  if (cmd.count("--seed")) {
    cfg.seed = a.seed;
    cfg.model.seed = a.seed;
  }
  if (cmd.count("--pattern")) cfg.model.pattern.kind = model::parse_pattern_kind(a.pattern);
  if (cmd.count("--epochs")) cfg.epochs = a.epochs;
  if (cmd.count("--lr")) cfg.lr = a.lr;
  if (cmd.count("--precision")) {
    cfg.precision = a.precision == "float64" ? pipeline::Precision::Float64 : pipeline::Precision::Float32;
  }
  cfg.validate();
  const auto data = pipeline::load_dataset(a.data);
  std::fprintf(stderr, "training %s pattern on %zu samples for %d epochs\n",
               model::pattern_kind_name(cfg.model.pattern.kind).c_str(), data.size(), cfg.epochs);
  const auto result = pipeline::train(data, cfg, a.out, &std::cerr);
  if (result.epochs.empty()) {
    std::printf("0 steps; initial checkpoint %s\n", (fs::path(a.out) / "checkpoint").c_str());
  } else {
    std::printf("%lld steps; final epoch loss %.6f; checkpoint %s\n", static_cast<long long>(result.steps),
                result.epochs.back().mean_loss, (fs::path(a.out) / "checkpoint").c_str());
  }
  return kOk;
}

int run_reconstruct(const ReconstructArgs& a) {
  const auto image = render::read_png(a.image);
  const auto pose = camera::load_pose(a.camera);
  with_model(a.checkpoint, [&](const auto& net) {
    const auto mesh = pipeline::reconstruct(net, image, pose, a.res);
    if (mesh.empty()) std::fprintf(stderr, "warning: predicted field has no zero crossing; writing an empty mesh\n");
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    geometry::write_obj(mesh, a.out);
    std::printf("%zu vertices, %zu triangles written to %s\n", mesh.vertices.size(), mesh.triangles.size(),
                a.out.c_str());
  });
  return kOk;
}

int run_eval(const EvalArgs& a) {
  const auto data = pipeline::load_dataset(a.data);
  pipeline::EvaluateOptions opts;
  opts.limit = a.limit;
  opts.grid_res = a.res;
  if (!a.meshes.empty()) opts.mesh_dir = a.meshes;
  with_model(a.checkpoint, [&](const auto& net) {
    const auto summary = pipeline::evaluate(net, data, opts, &std::cerr);
    const std::string text = pipeline::summary_to_json(summary).dump(2) + "\n";
    if (a.out.empty()) {
      std::cout << text;
    } else {
      write_text(a.out, text);
    }
    std::printf("mean  cd %.4f  emd %.4f  iou %.2f  (%zu samples, %zu empty)\n", summary.mean.cd, summary.mean.emd,
                summary.mean.iou, summary.samples.size(), summary.empty_count);
  });
  return kOk;
}

int run_stats(const StatsArgs& a) {
  std::vector<geometry::Vec3> probes;
  if (!a.data.empty()) {
    const auto manifest = pipeline::read_dataset_manifest(a.data);
    for (const auto& s : manifest.scenes) {
      for (const auto& p : sampling::load_sample_set((fs::path(a.data) / s.samples).string()).points) {
        probes.push_back(p.position);
      }
    }
  } else {
    probes = sampling::test_grid(a.grid);
  }
  with_model(a.checkpoint, [&](const auto& net) {
    const auto means = eval::pattern_offset_stats(net, probes);
    std::cout << eval::format_pattern_stats(means);
    if (!a.out.empty()) {
      if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
      eval::write_pattern_stats_csv(means, a.out);
    }
  });
  return kOk;
}

int run_gradcheck(const GradArgs& a) {
  auto reports = nn::run_op_gradchecks(a.seed);
  for (auto kind : {model::PatternKind::NonUniform6, model::PatternKind::Uniform6, model::PatternKind::NonUniform3,
                    model::PatternKind::Rigid3}) {
    reports.push_back(model::check_model_gradients(kind, a.seed));
  }
  bool ok = true;
  for (const auto& r : reports) {
    std::printf("%-4s %-24s max rel error %.3e  (%zu entries)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.max_rel_error, r.entries_checked);
    ok = ok && r.passed;
  }
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  psdf::retain_freed_memory();
  CLI::App app{"Single-view SDF reconstruction with learned spatial patterns"};
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "Dataset tools");
  dataset->require_subcommand(1);
  DatasetArgs dargs;
  auto* gen = dataset->add_subcommand("gen", "Generate scenes, renders and SDF samples");
  gen->add_option("--config", dargs.config, "Dataset config JSON")->check(CLI::ExistingFile);
  gen->add_option("--seed", dargs.seed, "Dataset seed");
  gen->add_option("--scenes", dargs.scenes, "Number of scenes");
  gen->add_option("--views", dargs.views, "Views per scene (at most 24)");
  gen->add_option("--out", dargs.out, "Output directory")->required();

  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--data", targs.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--config", targs.config, "Training config JSON")->check(CLI::ExistingFile);
  train->add_option("--seed", targs.seed, "Seed for initialization and batching");
  train->add_option("--pattern", targs.pattern, "Pattern kind")
      ->check(CLI::IsMember({"uniform6", "nonuniform6", "nonuniform3", "rigid3"}));
  train->add_option("--epochs", targs.epochs, "Number of epochs");
  train->add_option("--lr", targs.lr, "Base learning rate");
  train->add_option("--precision", targs.precision, "float32 or float64")->check(CLI::IsMember({"float32", "float64"}));
  train->add_option("--out", targs.out, "Run directory")->required();

  ReconstructArgs rargs;
  auto* rec = app.add_subcommand("reconstruct", "Extract a mesh from one image");
  rec->add_option("--checkpoint", rargs.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  rec->add_option("--image", rargs.image, "Input PNG")->required()->check(CLI::ExistingFile);
  rec->add_option("--camera", rargs.camera, "Camera JSON")->required()->check(CLI::ExistingFile);
  rec->add_option("--res", rargs.res, "Test grid resolution")->check(CLI::Range(2, 513));
  rec->add_option("--out", rargs.out, "Output OBJ")->required();

  EvalArgs eargs;
  auto* ev = app.add_subcommand("eval", "Score reconstructions against ground truth");
  ev->add_option("--checkpoint", eargs.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--data", eargs.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--limit", eargs.limit, "Evaluate at most N samples");
  ev->add_option("--res", eargs.res, "Test grid resolution")->check(CLI::Range(2, 513));
  ev->add_option("--meshes", eargs.meshes, "Directory for reconstructed OBJ files");
  ev->add_option("--out", eargs.out, "Metrics JSON (stdout when omitted)");

  StatsArgs sargs;
  auto* stats = app.add_subcommand("pattern-stats", "Mean learned offset per pattern point");
  stats->add_option("--checkpoint", sargs.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--data", sargs.data, "Probe with the dataset's SDF samples")->check(CLI::ExistingDirectory);
  stats->add_option("--grid", sargs.grid, "Probe grid resolution when no dataset is given")->check(CLI::Range(2, 129));
  stats->add_option("--out", sargs.out, "CSV output (pattern_index,mean_offset)");

  GradArgs gargs;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every op and the model graph");
  grad->add_option("--seed", gargs.seed, "Seed for inputs and projections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return run_dataset(dargs, *gen);
    if (train->parsed()) return run_train(targs, *train);
    if (rec->parsed()) return run_reconstruct(rargs);
    if (ev->parsed()) return run_eval(eargs);
    if (stats->parsed()) return run_stats(sargs);
    if (grad->parsed()) return run_gradcheck(gargs);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
  return kUsage;
}
