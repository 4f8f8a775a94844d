#pragma once

#include "psdf/nn/parameters.hpp"

#include <cmath>
#include <span>

namespace psdf::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are created on the first step and keep the
/// parameter shapes.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void set_lr(double lr) { config_.lr = lr; }
  double lr() const { return config_.lr; }
  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

  /// Throws NumericError (leaving parameters untouched) when any gradient
  /// entry is non-finite, ShapeError when shapes disagree.
  void step(ParameterStore<T>& params, std::span<const Tensor<T>> grads) {
    if (grads.size() != params.size()) throw ShapeError("adam: gradient count does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (grads[i].shape() != params[i].value.shape()) {
        throw ShapeError("adam: gradient " + shape_str(grads[i].shape()) + " for parameter " + params[i].name +
                         " " + shape_str(params[i].value.shape()));
      }
      for (T g : grads[i].values()) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw NumericError("adam: non-finite gradient for parameter " + params[i].name);
        }
      }
    }
    if (first_.empty()) {
      for (const auto& p : params) {
        first_.emplace_back(p.value.shape());
        second_.emplace_back(p.value.shape());
      }
    }
    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].value;
      auto& m = first_[i];
      auto& v = second_[i];
      const auto& g = grads[i];
      for (std::int64_t k = 0; k < p.size(); ++k) {
        m[k] = b1 * m[k] + (T(1) - b1) * g[k];
        v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
        const double mhat = static_cast<double>(m[k]) / c1;
        const double vhat = static_cast<double>(v[k]) / c2;
        p[k] -= static_cast<T>(config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
      }
    }
  }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<Tensor<T>> first_;
  std::vector<Tensor<T>> second_;
};

}  // namespace psdf::nn
