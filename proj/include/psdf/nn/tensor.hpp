#pragma once

#include "psdf/error.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace psdf::nn {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

/// Buffers start on a full SIMD-register boundary, so vectorized reductions
/// split their work identically for every allocation.
template <typename T>
using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense row-major n-d array.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}
  Tensor(Shape shape, Storage<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
      throw ShapeError("Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_str(shape_));
    }
  }
  Tensor(Shape shape, const std::vector<T>& data) : Tensor(std::move(shape), Storage<T>(data.begin(), data.end())) {}
  Tensor(Shape shape, std::initializer_list<T> data) : Tensor(std::move(shape), Storage<T>(data)) {}

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  Storage<T>& values() { return data_; }
  const Storage<T>& values() const { return data_; }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  T operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  /// Row-major matrix view with the given row count; columns = size / rows.
  MatrixMap<T> matrix(std::int64_t rows) { return {data_.data(), rows, rows ? size() / rows : 0}; }
  ConstMatrixMap<T> matrix(std::int64_t rows) const { return {data_.data(), rows, rows ? size() / rows : 0}; }
  /// 2-d view using the leading dimension as rows.
  MatrixMap<T> matrix() { return matrix(shape_.empty() ? 1 : shape_[0]); }
  ConstMatrixMap<T> matrix() const { return matrix(shape_.empty() ? 1 : shape_[0]); }

  void reshape(Shape shape) {
    if (shape_numel(shape) != size()) {
      throw ShapeError("reshape: " + shape_str(shape_) + " -> " + shape_str(shape));
    }
    shape_ = std::move(shape);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, Storage<U>(data_.begin(), data_.end()));
  }

 private:
  Shape shape_;
  Storage<T> data_;
};

}  // namespace psdf::nn
