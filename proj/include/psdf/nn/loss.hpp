#pragma once

#include "psdf/nn/tape.hpp"

#include <nlohmann/json.hpp>

#include <span>

namespace psdf::nn {

/// Weighted L1 field loss: points whose ground-truth |SDF| is below `delta`
/// are weighted by `omega1`, all others by `omega2`.
struct LossConfig {
  double omega1 = 4.0;
  double omega2 = 1.0;
  double delta = 0.01;

  void validate() const;
  double weight(double gt) const;
};

nlohmann::json loss_config_to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::json& j);

/// Sum over points of weight(gt) * |pred - gt|.
double weighted_sdf_loss(std::span<const double> pred, std::span<const double> gt, const LossConfig& cfg);

/// Graph version; `pred` holds N values (any shape), `gt` N targets. The
/// subgradient at pred == gt is 0.
template <typename T>
Var weighted_sdf_loss(Tape<T>& tape, Var pred, std::span<const T> gt, const LossConfig& cfg);

}  // namespace psdf::nn
