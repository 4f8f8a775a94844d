#pragma once

#include "psdf/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

namespace psdf::nn {

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
  friend bool operator==(Var, Var) = default;
};

/// Reverse-mode tape over tensor-valued nodes. Each recorded op stores its
/// output and, when any input tracks gradients, a closure that pushes the
/// output gradient back to its inputs. Gradient slots are allocated lazily.
///
/// Not thread-safe; one tape per graph instance.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var)>;

  Var constant(Tensor<T> value) { return push(std::move(value), nullptr, false, {}); }
  Var variable(Tensor<T> value) { return push(std::move(value), nullptr, grad_enabled_, {}); }
  /// Leaf that refers to externally owned storage; the tensor must outlive
  /// the tape entry.
  Var parameter(const Tensor<T>& value) { return push({}, &value, grad_enabled_, {}); }

  Var record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
  }
  Var record(Tensor<T> value, std::span<const Var> inputs, BackwardFn fn) {
    bool track = false;
    if (grad_enabled_) {
      for (Var v : inputs) track = track || nodes_[v.id].requires_grad;
    }
    return push(std::move(value), nullptr, track, track ? std::move(fn) : BackwardFn{});
  }

  const Tensor<T>& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.owned;
  }
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient accumulated at `v`; zeros when nothing reached it.
  Tensor<T> grad(Var v) const {
    const Node& n = nodes_[v.id];
    return n.grad.empty() ? Tensor<T>(value(v).shape()) : n.grad;
  }

  /// Mutable gradient slot for use inside backward closures.
  Tensor<T>& grad_slot(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty() && !value(v).empty()) n.grad = Tensor<T>(value(v).shape());
    return n.grad;
  }

  /// Seeds d(out)/d(out) = 1 for a single-element output and runs the
  /// recorded closures in reverse order.
  void backward(Var out) {
    if (value(out).size() != 1) {
      throw ShapeError("backward: output must have one element, got " + shape_str(value(out).shape()));
    }
    if (!requires_grad(out)) return;
    grad_slot(out)[0] += T(1);
    for (std::int64_t i = out.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.fn && !n.grad.empty()) n.fn(*this, Var{static_cast<std::uint32_t>(i)});
    }
  }

  void zero_grad() {
    for (auto& n : nodes_) n.grad = Tensor<T>();
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t mark() const { return nodes_.size(); }
  /// Drops every node recorded after `mark`.
  void rewind(std::size_t mark) { nodes_.resize(mark); }

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* ref = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn fn;
  };

  Var push(Tensor<T> value, const Tensor<T>* ref, bool requires_grad, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), ref, {}, requires_grad, std::move(fn)});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
};

/// Disables gradient recording on a tape for the lifetime of the guard.
template <typename T>
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape<T>& tape) : tape_(tape), previous_(tape.grad_enabled()) {
    tape_.set_grad_enabled(false);
  }
  ~NoGradGuard() { tape_.set_grad_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape<T>& tape_;
  bool previous_;
};

}  // namespace psdf::nn
