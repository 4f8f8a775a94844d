#pragma once

#include "psdf/nn/tape.hpp"

#include <optional>
#include <string>
#include <vector>

namespace psdf::nn {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

/// Ordered, named collection of trainable tensors.
template <typename T>
class ParameterStore {
 public:
  std::size_t add(std::string name, Shape shape) {
    if (find(name)) throw DataError("duplicate parameter name " + name);
    entries_.push_back({std::move(name), Tensor<T>(std::move(shape))});
    return entries_.size() - 1;
  }

  std::size_t size() const { return entries_.size(); }
  NamedTensor<T>& operator[](std::size_t i) { return entries_[i]; }
  const NamedTensor<T>& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::int64_t element_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  /// Registers every tensor on the tape as a gradient-tracking leaf.
  std::vector<Var> bind(Tape<T>& tape) const {
    std::vector<Var> vars;
    vars.reserve(entries_.size());
    for (const auto& e : entries_) vars.push_back(tape.parameter(e.value));
    return vars;
  }

  /// Gradients of the bound leaves after backward; zeros for untouched ones.
  std::vector<Tensor<T>> gradients(const Tape<T>& tape, const std::vector<Var>& bound) const {
    std::vector<Tensor<T>> grads;
    grads.reserve(bound.size());
    for (Var v : bound) grads.push_back(tape.grad(v));
    return grads;
  }

 private:
  std::vector<NamedTensor<T>> entries_;
};

}  // namespace psdf::nn
