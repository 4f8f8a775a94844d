#pragma once

#include "psdf/nn/tape.hpp"

#include <span>

namespace psdf::nn {

// Shape conventions: batches of vectors are [N, F]; images and feature maps
// for convolution are [C, H, W]; maps for bilinear lookup are [H, W, C].
// Every op throws ShapeError naming itself and the offending shapes.

/// y = x W^T + b with x [N, in], W [out, in], b [out].
template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var tanh(Tape<T>& tape, Var x);

/// Elementwise sum of equally shaped tensors.
template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

/// Elementwise product of equally shaped tensors.
template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);

/// Concatenation of rank-2 tensors along `axis` (0 = rows, 1 = columns).
template <typename T>
Var concat(Tape<T>& tape, std::span<const Var> parts, int axis);

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape);

/// Sum of all elements, shape [1].
template <typename T>
Var sum(Tape<T>& tape, Var x);

/// [1, F] -> [rows, F].
template <typename T>
Var broadcast_rows(Tape<T>& tape, Var x, std::int64_t rows);

/// 3x3 convolution with zero padding 1; x [Cin, H, W], weight [Cout, Cin, 3, 3],
/// bias [Cout]; stride 1 or 2.
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, int stride = 1);

/// 2x2 max pooling with stride 2; output size ceil(H/2) x ceil(W/2), windows
/// clipped at the border.
template <typename T>
Var max_pool2d(Tape<T>& tape, Var x);

/// [C, H, W] -> [1, C].
template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

/// [C, H, W] -> [H, W, C].
template <typename T>
Var chw_to_hwc(Tape<T>& tape, Var x);

struct BilinearOptions {
  /// Image grid the query pixels refer to; map coordinates are the pixel
  /// coordinates rescaled by (map_size - 1) / (image_size - 1).
  int image_width = 137;
  int image_height = 137;
  /// Propagate gradients into the query coordinates.
  bool coordinate_grad = false;
};

/// Samples map [H, W, C] at pixels [N, 2] (x, y) -> [N, C]. Queries must lie
/// inside [0, image_width - 1] x [0, image_height - 1].
template <typename T>
Var bilinear_sample(Tape<T>& tape, Var map, Var pixels, const BilinearOptions& options);

}  // namespace psdf::nn
