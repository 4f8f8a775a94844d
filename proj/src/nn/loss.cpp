#include "psdf/nn/loss.hpp"

#include <cmath>
#include <memory>

namespace psdf::nn {

void LossConfig::validate() const {
  if (!(omega1 > 0.0) || !(omega2 > 0.0)) throw DataError("loss config: weights must be positive");
  if (!(delta > 0.0)) throw DataError("loss config: delta must be positive");
}

double LossConfig::weight(double gt) const { return std::abs(gt) < delta ? omega1 : omega2; }

nlohmann::json loss_config_to_json(const LossConfig& cfg) {
  return {{"omega1", cfg.omega1}, {"omega2", cfg.omega2}, {"delta", cfg.delta}};
}

LossConfig loss_config_from_json(const nlohmann::json& j) {
  LossConfig cfg;
  cfg.omega1 = j.value("omega1", cfg.omega1);
  cfg.omega2 = j.value("omega2", cfg.omega2);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.validate();
  return cfg;
}

double weighted_sdf_loss(std::span<const double> pred, std::span<const double> gt, const LossConfig& cfg) {
  if (pred.size() != gt.size()) {
    throw ShapeError("weighted_sdf_loss: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(gt.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += cfg.weight(gt[i]) * std::abs(pred[i] - gt[i]);
  return total;
}

template <typename T>
Var weighted_sdf_loss(Tape<T>& tape, Var pred, std::span<const T> gt, const LossConfig& cfg) {
  const auto& p = tape.value(pred);
  if (static_cast<std::size_t>(p.size()) != gt.size()) {
    throw ShapeError("weighted_sdf_loss: predictions " + shape_str(p.shape()) + " vs " +
                     std::to_string(gt.size()) + " targets");
  }
  // Per-point d(loss)/d(pred) = weight * sign(pred - gt).
  auto slope = std::make_shared<std::vector<T>>(gt.size());
  T total = T(0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const T w = static_cast<T>(cfg.weight(static_cast<double>(gt[i])));
    const T diff = p[static_cast<std::int64_t>(i)] - gt[i];
    total += w * std::abs(diff);
    (*slope)[i] = diff > T(0) ? w : (diff < T(0) ? -w : T(0));
  }
  return tape.record(Tensor<T>({1}, total), {pred}, [pred, slope](Tape<T>& t, Var out) {
    if (!t.requires_grad(pred)) return;
    const T g = t.grad_slot(out)[0];
    auto& gp = t.grad_slot(pred);
    for (std::size_t i = 0; i < slope->size(); ++i) gp[static_cast<std::int64_t>(i)] += g * (*slope)[i];
  });
}

template Var weighted_sdf_loss<float>(Tape<float>&, Var, std::span<const float>, const LossConfig&);
template Var weighted_sdf_loss<double>(Tape<double>&, Var, std::span<const double>, const LossConfig&);

}  // namespace psdf::nn
