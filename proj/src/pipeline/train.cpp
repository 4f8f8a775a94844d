#include "psdf/pipeline/train.hpp"

#include "psdf/error.hpp"
#include "psdf/nn/adam.hpp"
#include "psdf/nn/checkpoint.hpp"
#include "psdf/nn/loss.hpp"
#include "psdf/nn/ops.hpp"
#include "psdf/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace psdf::pipeline {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DataError("train: lr must be positive");
  if (!(lr_decay > 0.0)) throw DataError("train: lr_decay must be positive");
  if (decay_every < 1) throw DataError("train: decay_every must be at least 1");
  if (epochs < 0) throw DataError("train: epochs must be non-negative");
  if (batch_size < 1) throw DataError("train: batch_size must be at least 1");
  if (points_per_step < 1) throw DataError("train: points_per_step must be at least 1");
  model.validate();
}

double TrainConfig::lr_at(int epoch) const { return lr * std::pow(lr_decay, epoch / decay_every); }

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"lr_decay", cfg.lr_decay},
          {"decay_every", cfg.decay_every},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"points_per_step", cfg.points_per_step},
          {"seed", cfg.seed},
          {"precision", cfg.precision == Precision::Float64 ? "float64" : "float32"},
          {"model", model::model_config_to_json(cfg.model)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    cfg.lr = j.value("lr", cfg.lr);
    cfg.lr_decay = j.value("lr_decay", cfg.lr_decay);
    cfg.decay_every = j.value("decay_every", cfg.decay_every);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.points_per_step = j.value("points_per_step", cfg.points_per_step);
    cfg.seed = j.value("seed", cfg.seed);
    const std::string precision = j.value("precision", std::string("float32"));
    if (precision == "float64") {
      cfg.precision = Precision::Float64;
    } else if (precision != "float32") {
      throw DataError("train config: precision must be float32 or float64");
    }
    if (j.contains("model")) cfg.model = model::model_config_from_json(j.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

template <typename T>
void save(const fs::path& dir, const model::SdfModel<T>& net, const TrainConfig& cfg, int epoch, std::int64_t step) {
  nlohmann::json config{{"model", model::model_config_to_json(net.config())},
                        {"train", train_config_to_json(cfg)},
                        {"epochs_completed", epoch}};
  nn::save_checkpoint((dir / "checkpoint").string(), net.parameters(), config, step);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
TrainResult run(const std::vector<TrainSample>& data, const TrainConfig& cfg, const fs::path& out, std::ostream* log) {
  model::SdfModel<T> net(cfg.model);
  nn::Adam<T> adam(nn::AdamConfig{cfg.lr});
  fs::create_directories(out);
  std::ofstream csv(out / "loss.csv");
  if (!csv) throw DataError("cannot write " + (out / "loss.csv").string());
  csv << "epoch,step,lr,loss\n";
  save(out, net, cfg, 0, 0);

  TrainResult result;
  const std::size_t n = data.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = cfg.lr_at(epoch);
    adam.set_lr(lr);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    CounterRng(cfg.seed, 0x65706f6368000000ULL + static_cast<std::uint64_t>(epoch))
        .shuffle(std::span<std::size_t>(order));

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t last = std::min(n, first + static_cast<std::size_t>(cfg.batch_size));
      nn::Tape<T> tape;
      auto g = net.bind(tape);
      std::vector<nn::Var> losses;
      std::size_t points = 0;
      for (std::size_t k = first; k < last; ++k) {
        const std::size_t idx = order[k];
        const TrainSample& sample = data[idx];
        const auto& pts = sample.samples->points;
        std::vector<std::size_t> pick(pts.size());
        std::iota(pick.begin(), pick.end(), 0);
        CounterRng(cfg.seed, (static_cast<std::uint64_t>(epoch) << 32) | idx).shuffle(std::span<std::size_t>(pick));
        pick.resize(std::min<std::size_t>(pick.size(), static_cast<std::size_t>(cfg.points_per_step)));
        std::vector<model::Vec3> queries;
        std::vector<T> gt;
        for (std::size_t i : pick) {
          queries.push_back(pts[i].position);
          gt.push_back(static_cast<T>(pts[i].sdf));
        }
        const auto pyramid = net.encode(g, sample.image);
        const auto fwd = net.forward(g, pyramid, sample.pose, queries);
        losses.push_back(nn::weighted_sdf_loss(tape, fwd.heads.sdf, std::span<const T>(gt), cfg.model.loss));
        points += queries.size();
      }
      nn::Var total = losses[0];
      for (std::size_t i = 1; i < losses.size(); ++i) total = nn::add(tape, total, losses[i]);
      total = nn::scale(tape, total, static_cast<T>(1.0 / static_cast<double>(points)));
      const double loss = static_cast<double>(tape.value(total)[0]);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(result.steps) + "; last good checkpoint kept in " +
                           (out / "checkpoint").string());
      }
      tape.backward(total);
      const auto grads = net.parameters().gradients(tape, g.params);
      adam.step(net.parameters(), std::span<const nn::Tensor<T>>(grads));
      csv << epoch << ',' << result.steps << ',' << format_g17(lr) << ',' << format_g17(loss) << '\n';
      epoch_loss += loss;
      ++epoch_steps;
      ++result.steps;
    }
    csv.flush();
    save(out, net, cfg, epoch + 1, result.steps);
    EpochStats stats{epoch, lr, epoch_loss / epoch_steps,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    result.epochs.push_back(stats);
    if (log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %d/%d  lr %.3g  loss %.6f  (%.1f s)\n", epoch + 1, cfg.epochs, lr,
                    stats.mean_loss, stats.seconds);
      *log << buf << std::flush;
    }
  }
  if (!csv) throw DataError("failed writing " + (out / "loss.csv").string());
  return result;
}

}  // namespace

TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg, const fs::path& out, std::ostream* log) {
  cfg.validate();
  if (data.empty()) throw DataError("train: dataset is empty");
  for (const auto& s : data) {
    if (s.image.width != cfg.model.encoder.input_width || s.image.height != cfg.model.encoder.input_height) {
      throw DataError("train: image of " + s.scene_id + " does not match the encoder input size");
    }
  }
  return cfg.precision == Precision::Float64 ? run<double>(data, cfg, out, log) : run<float>(data, cfg, out, log);
}

std::vector<double> epoch_mean_losses(const fs::path& loss_csv) {
  std::ifstream in(loss_csv);
  if (!in) throw DataError("cannot open " + loss_csv.string());
  std::string line;
  std::getline(in, line);
  std::map<int, std::pair<double, int>> acc;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string epoch, step, lr, loss;
    if (!std::getline(row, epoch, ',') || !std::getline(row, step, ',') || !std::getline(row, lr, ',') ||
        !std::getline(row, loss)) {
      throw DataError("malformed loss log row: " + line);
    }
    auto& slot = acc[std::stoi(epoch)];
    slot.first += std::stod(loss);
    slot.second += 1;
  }
  std::vector<double> means;
  for (const auto& [epoch, v] : acc) {
    if (epoch != static_cast<int>(means.size())) throw DataError("loss log skips epoch " + std::to_string(means.size()));
    means.push_back(v.first / v.second);
  }
  return means;
}

}  // namespace psdf::pipeline
