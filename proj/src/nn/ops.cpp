#include "psdf/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace psdf::nn {
namespace {

void expect(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw ShapeError(op + ": " + what);
}

template <typename T>
void expect_rank(const Tape<T>& tape, Var v, std::size_t rank, const std::string& op, const char* name) {
  expect(tape.shape(v).size() == rank, op,
         std::string(name) + " must have rank " + std::to_string(rank) + ", got " + shape_str(tape.shape(v)));
}

}  // namespace

template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias) {
  expect_rank(tape, x, 2, "linear", "input");
  expect_rank(tape, weight, 2, "linear", "weight");
  const auto& xs = tape.shape(x);
  const auto& ws = tape.shape(weight);
  expect(xs[1] == ws[1], "linear",
         "input " + shape_str(xs) + " does not match weight " + shape_str(ws));
  expect(tape.shape(bias) == Shape{ws[0]}, "linear",
         "bias " + shape_str(tape.shape(bias)) + " does not match weight " + shape_str(ws));
  const std::int64_t n = xs[0];
  Tensor<T> y({n, ws[0]});
  auto ym = y.matrix();
  ym.noalias() = tape.value(x).matrix() * tape.value(weight).matrix().transpose();
  ym.rowwise() += tape.value(bias).matrix(1).row(0);
  return tape.record(std::move(y), {x, weight, bias}, [x, weight, bias, n](Tape<T>& t, Var out) {
    const auto g = t.grad_slot(out).matrix(n);
    if (t.requires_grad(x)) t.grad_slot(x).matrix().noalias() += g * t.value(weight).matrix();
    if (t.requires_grad(weight)) t.grad_slot(weight).matrix().noalias() += g.transpose() * t.value(x).matrix();
    if (t.requires_grad(bias)) t.grad_slot(bias).matrix(1) += g.colwise().sum();
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> y = tape.value(x);
  for (auto& v : y.values()) v = v > T(0) ? v : T(0);
  return tape.record(std::move(y), {x}, [x](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const auto& g = t.grad_slot(out);
    const auto& xv = t.value(x);
    auto& gx = t.grad_slot(x);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T(0)) gx[i] += g[i];
    }
  });
}

template <typename T>
Var tanh(Tape<T>& tape, Var x) {
  Tensor<T> y = tape.value(x);
  for (auto& v : y.values()) v = std::tanh(v);
  return tape.record(std::move(y), {x}, [x](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const auto& g = t.grad_slot(out);
    const auto& yv = t.value(out);
    auto& gx = t.grad_slot(x);
    for (std::int64_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T(1) - yv[i] * yv[i]);
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  expect(tape.shape(a) == tape.shape(b), "add",
         "shapes " + shape_str(tape.shape(a)) + " and " + shape_str(tape.shape(b)) + " differ");
  Tensor<T> y = tape.value(a);
  const auto& bv = tape.value(b);
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return tape.record(std::move(y), {a, b}, [a, b](Tape<T>& t, Var out) {
    for (Var in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      const auto& g = t.grad_slot(out);
      auto& gi = t.grad_slot(in);
      for (std::int64_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  expect(tape.shape(a) == tape.shape(b), "mul",
         "shapes " + shape_str(tape.shape(a)) + " and " + shape_str(tape.shape(b)) + " differ");
  Tensor<T> y = tape.value(a);
  const auto& bv = tape.value(b);
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return tape.record(std::move(y), {a, b}, [a, b](Tape<T>& t, Var out) {
    const auto& g = t.grad_slot(out);
    if (t.requires_grad(a)) {
      auto& ga = t.grad_slot(a);
      const auto& bv = t.value(b);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      auto& gb = t.grad_slot(b);
      const auto& av = t.value(a);
      for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  Tensor<T> y = tape.value(x);
  for (auto& v : y.values()) v *= factor;
  return tape.record(std::move(y), {x}, [x, factor](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const auto& g = t.grad_slot(out);
    auto& gx = t.grad_slot(x);
    for (std::int64_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
  });
}

template <typename T>
Var concat(Tape<T>& tape, std::span<const Var> parts, int axis) {
  expect(!parts.empty(), "concat", "no inputs");
  expect(axis == 0 || axis == 1, "concat", "axis must be 0 or 1");
  const int other = 1 - axis;
  std::vector<std::int64_t> extents;
  std::int64_t total = 0;
  const std::int64_t shared = tape.shape(parts[0]).size() == 2 ? tape.shape(parts[0])[other] : -1;
  for (Var p : parts) {
    const auto& s = tape.shape(p);
    expect(s.size() == 2 && s[other] == shared, "concat",
           "input " + shape_str(s) + " incompatible along axis " + std::to_string(axis));
    extents.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = axis == 0 ? Shape{total, shared} : Shape{shared, total};
  Tensor<T> y(out_shape);
  auto ym = y.matrix();
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto pm = tape.value(parts[i]).matrix();
    if (axis == 0) {
      ym.middleRows(offset, extents[i]) = pm;
    } else {
      ym.middleCols(offset, extents[i]) = pm;
    }
    offset += extents[i];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape.record(std::move(y), parts, [inputs, extents, axis](Tape<T>& t, Var out) {
    const auto g = t.grad_slot(out).matrix();
    std::int64_t offset = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (t.requires_grad(inputs[i])) {
        auto gi = t.grad_slot(inputs[i]).matrix();
        if (axis == 0) {
          gi += g.middleRows(offset, extents[i]);
        } else {
          gi += g.middleCols(offset, extents[i]);
        }
      }
      offset += extents[i];
    }
  });
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape) {
  Tensor<T> y = tape.value(x);
  if (shape_numel(shape) != y.size()) {
    throw ShapeError("reshape: " + shape_str(y.shape()) + " -> " + shape_str(shape));
  }
  y.reshape(std::move(shape));
  return tape.record(std::move(y), {x}, [x](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const auto& g = t.grad_slot(out);
    auto& gx = t.grad_slot(x);
    for (std::int64_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  T total = T(0);
  for (T v : tape.value(x).values()) total += v;
  return tape.record(Tensor<T>({1}, total), {x}, [x](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const T g = t.grad_slot(out)[0];
    for (auto& v : t.grad_slot(x).values()) v += g;
  });
}

template <typename T>
Var broadcast_rows(Tape<T>& tape, Var x, std::int64_t rows) {
  const auto& s = tape.shape(x);
  expect(s.size() == 2 && s[0] == 1, "broadcast_rows", "input must be [1, F], got " + shape_str(s));
  Tensor<T> y({rows, s[1]});
  y.matrix().rowwise() = tape.value(x).matrix(1).row(0);
  return tape.record(std::move(y), {x}, [x](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    t.grad_slot(x).matrix(1) += t.grad_slot(out).matrix().colwise().sum();
  });
}

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, int stride) {
  expect_rank(tape, x, 3, "conv2d", "input");
  expect(stride == 1 || stride == 2, "conv2d", "stride must be 1 or 2");
  const auto& xs = tape.shape(x);
  const auto& ws = tape.shape(weight);
  expect(ws.size() == 4 && ws[1] == xs[0] && ws[2] == 3 && ws[3] == 3, "conv2d",
         "weight " + shape_str(ws) + " does not match input " + shape_str(xs));
  expect(tape.shape(bias) == Shape{ws[0]}, "conv2d", "bias " + shape_str(tape.shape(bias)) + " mismatched");
  const std::int64_t cin = xs[0], h = xs[1], w = xs[2], cout = ws[0];
  const std::int64_t ho = (h - 1) / stride + 1;
  const std::int64_t wo = (w - 1) / stride + 1;
  const std::int64_t k = cin * 9;

  auto col = std::make_shared<RowMatrix<T>>(k, ho * wo);
  const T* xin = tape.value(x).data();
  for (std::int64_t c = 0; c < cin; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = col->data() + ((c * 3 + ky) * 3 + kx) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = oy * stride + ky - 1;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = ox * stride + kx - 1;
            row[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? xin[(c * h + iy) * w + ix] : T(0);
          }
        }
      }
    }
  }
  Tensor<T> y({cout, ho, wo});
  auto ym = y.matrix(cout);
  ym.noalias() = tape.value(weight).matrix(cout) * (*col);
  ym.colwise() += tape.value(bias).matrix(cout).col(0);

  return tape.record(std::move(y), {x, weight, bias},
                     [=](Tape<T>& t, Var out) {
                       const auto g = t.grad_slot(out).matrix(cout);
                       if (t.requires_grad(weight)) {
                         t.grad_slot(weight).matrix(cout).noalias() += g * col->transpose();
                       }
                       if (t.requires_grad(bias)) t.grad_slot(bias).matrix(cout).col(0) += g.rowwise().sum();
                       if (!t.requires_grad(x)) return;
                       RowMatrix<T> dcol = t.value(weight).matrix(cout).transpose() * g;
                       T* gx = t.grad_slot(x).data();
                       for (std::int64_t c = 0; c < cin; ++c) {
                         for (int ky = 0; ky < 3; ++ky) {
                           for (int kx = 0; kx < 3; ++kx) {
                             const T* row = dcol.data() + ((c * 3 + ky) * 3 + kx) * ho * wo;
                             for (std::int64_t oy = 0; oy < ho; ++oy) {
                               const std::int64_t iy = oy * stride + ky - 1;
                               if (iy < 0 || iy >= h) continue;
                               for (std::int64_t ox = 0; ox < wo; ++ox) {
                                 const std::int64_t ix = ox * stride + kx - 1;
                                 if (ix >= 0 && ix < w) gx[(c * h + iy) * w + ix] += row[oy * wo + ox];
                               }
                             }
                           }
                         }
                       }
                     });
}

template <typename T>
Var max_pool2d(Tape<T>& tape, Var x) {
  expect_rank(tape, x, 3, "max_pool2d", "input");
  const auto& xs = tape.shape(x);
  const std::int64_t c = xs[0], h = xs[1], w = xs[2];
  const std::int64_t ho = (h + 1) / 2, wo = (w + 1) / 2;
  Tensor<T> y({c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(c * ho * wo));
  const auto& xv = tape.value(x);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t oy = 0; oy < ho; ++oy) {
      for (std::int64_t ox = 0; ox < wo; ++ox) {
        std::int64_t best = (ch * h + 2 * oy) * w + 2 * ox;
        for (std::int64_t dy = 0; dy < 2; ++dy) {
          for (std::int64_t dx = 0; dx < 2; ++dx) {
            const std::int64_t iy = 2 * oy + dy, ix = 2 * ox + dx;
            if (iy >= h || ix >= w) continue;
            const std::int64_t idx = (ch * h + iy) * w + ix;
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        const std::int64_t o = (ch * ho + oy) * wo + ox;
        y[o] = xv[best];
        (*argmax)[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return tape.record(std::move(y), {x}, [x, argmax](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const auto& g = t.grad_slot(out);
    auto& gx = t.grad_slot(x);
    for (std::int64_t o = 0; o < g.size(); ++o) gx[(*argmax)[static_cast<std::size_t>(o)]] += g[o];
  });
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  expect_rank(tape, x, 3, "global_avg_pool", "input");
  const auto& xs = tape.shape(x);
  const std::int64_t c = xs[0], hw = xs[1] * xs[2];
  expect(hw > 0, "global_avg_pool", "empty spatial extent");
  Tensor<T> y({1, c});
  const auto xm = tape.value(x).matrix(c);
  for (std::int64_t ch = 0; ch < c; ++ch) y[ch] = xm.row(ch).sum() / static_cast<T>(hw);
  return tape.record(std::move(y), {x}, [x, c, hw](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    const auto& g = t.grad_slot(out);
    auto gx = t.grad_slot(x).matrix(c);
    for (std::int64_t ch = 0; ch < c; ++ch) gx.row(ch).array() += g[ch] / static_cast<T>(hw);
  });
}

template <typename T>
Var chw_to_hwc(Tape<T>& tape, Var x) {
  expect_rank(tape, x, 3, "chw_to_hwc", "input");
  const auto& xs = tape.shape(x);
  const std::int64_t c = xs[0], h = xs[1], w = xs[2];
  Tensor<T> y({h, w, c});
  y.matrix(h * w) = tape.value(x).matrix(c).transpose();
  return tape.record(std::move(y), {x}, [x, c, h, w](Tape<T>& t, Var out) {
    if (!t.requires_grad(x)) return;
    t.grad_slot(x).matrix(c) += t.grad_slot(out).matrix(h * w).transpose();
  });
}

namespace {

struct BilinearCell {
  std::int64_t x0, x1, y0, y1;
  double tx, ty;
};

inline BilinearCell locate(double u, double v, std::int64_t mw, std::int64_t mh) {
  BilinearCell cell{0, 0, 0, 0, 0.0, 0.0};
  if (mw > 1) {
    cell.x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(u)), 0, mw - 2);
    cell.x1 = cell.x0 + 1;
    cell.tx = u - static_cast<double>(cell.x0);
  }
  if (mh > 1) {
    cell.y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(v)), 0, mh - 2);
    cell.y1 = cell.y0 + 1;
    cell.ty = v - static_cast<double>(cell.y0);
  }
  return cell;
}

}  // namespace

template <typename T>
Var bilinear_sample(Tape<T>& tape, Var map, Var pixels, const BilinearOptions& options) {
  expect_rank(tape, map, 3, "bilinear_sample", "map");
  const auto& ps = tape.shape(pixels);
  expect(ps.size() == 2 && ps[1] == 2, "bilinear_sample", "pixels must be [N, 2], got " + shape_str(ps));
  const auto& ms = tape.shape(map);
  const std::int64_t mh = ms[0], mw = ms[1], c = ms[2], n = ps[0];
  const double sx = options.image_width > 1 ? static_cast<double>(mw - 1) / (options.image_width - 1) : 0.0;
  const double sy = options.image_height > 1 ? static_cast<double>(mh - 1) / (options.image_height - 1) : 0.0;

  Tensor<T> y({n, c});
  const T* m = tape.value(map).data();
  const auto& pv = tape.value(pixels);
  for (std::int64_t q = 0; q < n; ++q) {
    const auto cell = locate(pv[2 * q] * sx, pv[2 * q + 1] * sy, mw, mh);
    const T w00 = static_cast<T>((1 - cell.tx) * (1 - cell.ty));
    const T w10 = static_cast<T>(cell.tx * (1 - cell.ty));
    const T w01 = static_cast<T>((1 - cell.tx) * cell.ty);
    const T w11 = static_cast<T>(cell.tx * cell.ty);
    const T* f00 = m + (cell.y0 * mw + cell.x0) * c;
    const T* f10 = m + (cell.y0 * mw + cell.x1) * c;
    const T* f01 = m + (cell.y1 * mw + cell.x0) * c;
    const T* f11 = m + (cell.y1 * mw + cell.x1) * c;
    T* out = y.data() + q * c;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      out[ch] = w00 * f00[ch] + w10 * f10[ch] + w01 * f01[ch] + w11 * f11[ch];
    }
  }
  const bool coordinate_grad = options.coordinate_grad;
  return tape.record(std::move(y), {map, pixels}, [=](Tape<T>& t, Var out) {
    const bool want_map = t.requires_grad(map);
    const bool want_pix = coordinate_grad && t.requires_grad(pixels);
    if (!want_map && !want_pix) return;
    const auto& g = t.grad_slot(out);
    const auto& pv = t.value(pixels);
    const T* m = t.value(map).data();
    T* gm = want_map ? t.grad_slot(map).data() : nullptr;
    T* gp = want_pix ? t.grad_slot(pixels).data() : nullptr;
    for (std::int64_t q = 0; q < n; ++q) {
      const auto cell = locate(pv[2 * q] * sx, pv[2 * q + 1] * sy, mw, mh);
      const std::int64_t i00 = (cell.y0 * mw + cell.x0) * c;
      const std::int64_t i10 = (cell.y0 * mw + cell.x1) * c;
      const std::int64_t i01 = (cell.y1 * mw + cell.x0) * c;
      const std::int64_t i11 = (cell.y1 * mw + cell.x1) * c;
      const T* gq = g.data() + q * c;
      if (gm) {
        const T w00 = static_cast<T>((1 - cell.tx) * (1 - cell.ty));
        const T w10 = static_cast<T>(cell.tx * (1 - cell.ty));
        const T w01 = static_cast<T>((1 - cell.tx) * cell.ty);
        const T w11 = static_cast<T>(cell.tx * cell.ty);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          gm[i00 + ch] += w00 * gq[ch];
          gm[i10 + ch] += w10 * gq[ch];
          gm[i01 + ch] += w01 * gq[ch];
          gm[i11 + ch] += w11 * gq[ch];
        }
      }
      if (gp) {
        T du = 0, dv = 0;
        const T tx = static_cast<T>(cell.tx), ty = static_cast<T>(cell.ty);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const T f00 = m[i00 + ch], f10 = m[i10 + ch], f01 = m[i01 + ch], f11 = m[i11 + ch];
          du += gq[ch] * ((1 - ty) * (f10 - f00) + ty * (f11 - f01));
          dv += gq[ch] * ((1 - tx) * (f01 - f00) + tx * (f11 - f10));
        }
        if (mw > 1) gp[2 * q] += du * static_cast<T>(sx);
        if (mh > 1) gp[2 * q + 1] += dv * static_cast<T>(sy);
      }
    }
  });
}

#define PSDF_INSTANTIATE_OPS(T)                                                      \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                                   \
  template Var relu<T>(Tape<T>&, Var);                                               \
  template Var tanh<T>(Tape<T>&, Var);                                               \
  template Var add<T>(Tape<T>&, Var, Var);                                           \
  template Var mul<T>(Tape<T>&, Var, Var);                                           \
  template Var scale<T>(Tape<T>&, Var, T);                                           \
  template Var concat<T>(Tape<T>&, std::span<const Var>, int);                       \
  template Var reshape<T>(Tape<T>&, Var, Shape);                                     \
  template Var sum<T>(Tape<T>&, Var);                                                \
  template Var broadcast_rows<T>(Tape<T>&, Var, std::int64_t);                       \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, int);                              \
  template Var max_pool2d<T>(Tape<T>&, Var);                                         \
  template Var global_avg_pool<T>(Tape<T>&, Var);                                    \
  template Var chw_to_hwc<T>(Tape<T>&, Var);                                         \
  template Var bilinear_sample<T>(Tape<T>&, Var, Var, const BilinearOptions&);

PSDF_INSTANTIATE_OPS(float)
PSDF_INSTANTIATE_OPS(double)

}  // namespace psdf::nn
