#pragma once

#include "psdf/model/model.hpp"
#include "psdf/pipeline/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace psdf::pipeline {

enum class Precision { Float32, Float64 };

struct TrainConfig {
  double lr = 1e-4;
  double lr_decay = 0.9;
  int decay_every = 5;
  int epochs = 60;
  /// TrainSamples per optimizer step.
  int batch_size = 4;
  /// Points each sample contributes per epoch, drawn from its SampleSet.
  int points_per_step = 512;
  std::uint64_t seed = 1;
  Precision precision = Precision::Float32;
  model::ModelConfig model;

  void validate() const;
  /// lr * lr_decay^floor(epoch / decay_every), epochs counted from 0.
  double lr_at(int epoch) const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Missing keys keep the defaults; "model" holds a model config object.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::int64_t steps = 0;
};

/// Minibatch Adam on the per-point mean of the weighted L1 SDF loss.
/// Writes `<out>/loss.csv` (epoch, step, lr, loss), and `<out>/checkpoint`
/// before the first step and after every epoch. A non-finite loss or
/// gradient throws NumericError and leaves the last epoch's checkpoint.
TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg, const std::filesystem::path& out,
                  std::ostream* log = nullptr);

/// Mean loss per epoch read back from a loss log.
std::vector<double> epoch_mean_losses(const std::filesystem::path& loss_csv);

}  // namespace psdf::pipeline
