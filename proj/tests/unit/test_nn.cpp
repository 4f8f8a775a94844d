#include "psdf/error.hpp"
#include "psdf/nn/adam.hpp"
#include "psdf/nn/checkpoint.hpp"
#include "psdf/nn/gradcheck.hpp"
#include "psdf/nn/loss.hpp"
#include "psdf/nn/ops.hpp"
#include "psdf/nn/parameters.hpp"
#include "psdf/nn/tape.hpp"
#include "psdf/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace psdf;
using namespace psdf::nn;

namespace {

Tensor<double> random_tensor(Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("linear gradient of a sum is the outer product") {
  Tape<double> tape;
  const Var x = tape.variable(Tensor<double>({1, 3}, {1.0, 2.0, 3.0}));
  const Var w = tape.variable(Tensor<double>({2, 3}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  const Var b = tape.variable(Tensor<double>({2}, {0.0, 0.0}));
  const Var y = linear(tape, x, w, b);
  CHECK(tape.value(y)[0] == doctest::Approx(1.4));
  CHECK(tape.value(y)[1] == doctest::Approx(3.2));
  tape.backward(sum(tape, y));
  const auto gw = tape.grad(w);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(gw[r * 3 + c] == c + 1.0);
  }
  CHECK(tape.grad(b)[0] == 1.0);
  CHECK(tape.grad(x)[0] == doctest::Approx(0.5));
}

TEST_CASE("relu and tanh local gradients") {
  Tape<double> tape;
  const Var x = tape.variable(Tensor<double>({2}, {-1.0, 2.0}));
  tape.backward(sum(tape, relu(tape, x)));
  CHECK(tape.grad(x)[0] == 0.0);
  CHECK(tape.grad(x)[1] == 1.0);

  Tape<double> t2;
  const Var z = t2.variable(Tensor<double>({1}, {0.3}));
  t2.backward(sum(t2, nn::tanh(t2, z)));
  CHECK(t2.grad(z)[0] == doctest::Approx(1.0 - std::tanh(0.3) * std::tanh(0.3)).epsilon(1e-14));
}

TEST_CASE("shape mismatches name the op") {
  Tape<double> tape;
  const Var x = tape.variable(Tensor<double>({2, 3}));
  const Var w = tape.variable(Tensor<double>({4, 5}));
  const Var b = tape.variable(Tensor<double>({4}));
  try {
    linear(tape, x, w, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("linear") != std::string::npos);
  }
  CHECK_THROWS_AS(add(tape, x, w), ShapeError);
  CHECK_THROWS_AS(reshape(tape, x, {7}), ShapeError);
}

TEST_CASE("conv2d and pooling shapes") {
  Tape<double> tape;
  CounterRng rng(1, 1);
  const Var x = tape.variable(random_tensor({2, 7, 5}, rng));
  const Var w = tape.variable(random_tensor({3, 2, 3, 3}, rng));
  const Var b = tape.variable(random_tensor({3}, rng));
  CHECK(tape.shape(conv2d(tape, x, w, b, 1)) == Shape{3, 7, 5});
  CHECK(tape.shape(conv2d(tape, x, w, b, 2)) == Shape{3, 4, 3});
  CHECK(tape.shape(max_pool2d(tape, x)) == Shape{2, 4, 3});
  CHECK(tape.shape(global_avg_pool(tape, x)) == Shape{1, 2});
  CHECK(tape.shape(chw_to_hwc(tape, x)) == Shape{7, 5, 2});
}

TEST_CASE("conv2d matches a direct loop oracle") {
  CounterRng rng(2, 2);
  const auto xin = random_tensor({2, 5, 6}, rng);
  const auto win = random_tensor({3, 2, 3, 3}, rng);
  const auto bin = random_tensor({3}, rng);
  for (int stride : {1, 2}) {
    Tape<double> tape;
    const auto& out = tape.value(conv2d(tape, tape.constant(xin), tape.constant(win), tape.constant(bin), stride));
    const int ho = (5 + stride - 1) / stride, wo = (6 + stride - 1) / stride;
    for (int o = 0; o < 3; ++o) {
      for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
          double acc = bin[o];
          for (int c = 0; c < 2; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = y * stride + ky - 1, ix = x * stride + kx - 1;
                if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
                acc += win[((o * 2 + c) * 3 + ky) * 3 + kx] * xin[(c * 5 + iy) * 6 + ix];
              }
            }
          }
          CHECK(out[(o * ho + y) * wo + x] == doctest::Approx(acc).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("bilinear sampling examples") {
  BilinearOptions full{.image_width = 4, .image_height = 3};
  CounterRng rng(3, 3);
  const auto map = random_tensor({3, 4, 2}, rng);
  Tape<double> tape;
  const Var m = tape.constant(map);
  const auto& exact = tape.value(bilinear_sample(tape, m, tape.constant(Tensor<double>({1, 2}, {2.0, 1.0})), full));
  CHECK(exact[0] == map[(1 * 4 + 2) * 2 + 0]);
  CHECK(exact[1] == map[(1 * 4 + 2) * 2 + 1]);

  Tensor<double> step({1, 2, 1}, {0.0, 1.0});
  const auto& mid = tape.value(bilinear_sample(tape, tape.constant(step), tape.constant(Tensor<double>({1, 2}, {0.5, 0.0})),
                                               BilinearOptions{.image_width = 2, .image_height = 1}));
  CHECK(mid[0] == 0.5);

  Tensor<double> flat({5, 5, 3}, 0.25);
  for (int i = 0; i < 50; ++i) {
    const Tensor<double> q({1, 2}, {rng.uniform(0, 136), rng.uniform(0, 136)});
    const auto& v = tape.value(bilinear_sample(tape, tape.constant(flat), tape.constant(q), BilinearOptions{}));
    for (int c = 0; c < 3; ++c) CHECK(v[c] == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("bilinear coordinate gradient is optional") {
  CounterRng rng(4, 4);
  const auto map = random_tensor({4, 4, 2}, rng);
  for (bool coord : {false, true}) {
    Tape<double> tape;
    const Var m = tape.variable(map);
    const Var q = tape.variable(Tensor<double>({1, 2}, {1.3, 2.6}));
    tape.backward(sum(tape, bilinear_sample(tape, m, q,
                                            BilinearOptions{.image_width = 4, .image_height = 4, .coordinate_grad = coord})));
    const auto gq = tape.grad(q);
    if (coord) {
      CHECK(gq[0] != 0.0);
    } else {
      CHECK(gq[0] == 0.0);
      CHECK(gq[1] == 0.0);
    }
    double total = 0.0;
    for (double g : tape.grad(m).values()) total += g;
    CHECK(total == doctest::Approx(2.0));
  }
}

TEST_CASE("every op passes the finite-difference gradient check") {
  for (const auto& r : run_op_gradchecks(11)) {
    CAPTURE(r.name);
    CAPTURE(r.max_rel_error);
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.entries_checked > 0);
  }
}

TEST_CASE("composed graph gradient check") {
  CounterRng rng(5, 5);
  const auto report = check_gradients(
      "conv-pool-gap-linear-tanh",
      [](Tape<double>& t, const std::vector<Var>& in) {
        Var h = relu(t, conv2d(t, in[0], in[1], in[2], 1));
        h = global_avg_pool(t, max_pool2d(t, h));
        return nn::tanh(t, linear(t, h, in[3], in[4]));
      },
      {random_tensor({2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng),
       random_tensor({4, 3}, rng), random_tensor({4}, rng)});
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("weighted loss examples") {
  const LossConfig cfg;
  const double p1[] = {0.05}, g1[] = {0.005};
  CHECK(weighted_sdf_loss(p1, g1, cfg) == doctest::Approx(0.18).epsilon(1e-12));
  const double p2[] = {0.95}, g2[] = {0.5};
  CHECK(weighted_sdf_loss(p2, g2, cfg) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(weighted_sdf_loss(g2, g2, cfg) == 0.0);
  const double g3[] = {-0.005};
  CHECK(weighted_sdf_loss(p1, g3, cfg) == doctest::Approx(4 * 0.055).epsilon(1e-12));
  CHECK(cfg.weight(0.01) == 1.0);
  LossConfig bad;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("loss is non-negative and zero only at equality") {
  CounterRng rng(6, 6);
  const LossConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const double p[] = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
    const double g[] = {rng.uniform(-0.02, 0.02), rng.uniform(-0.2, 0.2)};
    CHECK(weighted_sdf_loss(p, g, cfg) > 0.0);
    CHECK(weighted_sdf_loss(g, g, cfg) == 0.0);
  }
}

TEST_CASE("graph loss matches the scalar loss and its gradient") {
  const LossConfig cfg;
  Tape<double> tape;
  const Var pred = tape.variable(Tensor<double>({3}, {0.05, 0.95, 0.2}));
  const std::vector<double> gt = {0.005, 0.5, 0.2};
  const Var loss = weighted_sdf_loss(tape, pred, std::span<const double>(gt), cfg);
  CHECK(tape.value(loss)[0] == doctest::Approx(0.63).epsilon(1e-12));
  tape.backward(loss);
  CHECK(tape.grad(pred)[0] == 4.0);
  CHECK(tape.grad(pred)[1] == 1.0);
  CHECK(tape.grad(pred)[2] == 0.0);
}

TEST_CASE("adam first step and zero gradient") {
  ParameterStore<double> params;
  params.add("w", {3});
  params[0].value.fill(0.5);
  Adam<double> opt(AdamConfig{.lr = 1e-4});
  std::vector<Tensor<double>> grads{Tensor<double>({3}, 1.0)};
  opt.step(params, grads);
  for (double v : params[0].value.values()) CHECK(v == doctest::Approx(0.5 - 1e-4).epsilon(1e-9));

  ParameterStore<double> still;
  still.add("w", {2});
  still[0].value.fill(0.25);
  Adam<double> opt2;
  std::vector<Tensor<double>> zero{Tensor<double>({2}, 0.0)};
  for (int i = 0; i < 5; ++i) opt2.step(still, zero);
  for (double v : still[0].value.values()) CHECK(v == 0.25);
}

TEST_CASE("adam descends a quadratic bowl") {
  ParameterStore<double> params;
  params.add("x", {1});
  params[0].value[0] = 1.0;
  Adam<double> opt(AdamConfig{.lr = 0.1});
  for (int i = 0; i < 200; ++i) {
    std::vector<Tensor<double>> g{Tensor<double>({1}, 2.0 * params[0].value[0])};
    opt.step(params, g);
  }
  CHECK(std::abs(params[0].value[0]) < 0.05);
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
  ParameterStore<double> params;
  params.add("w", {2});
  Adam<double> opt;
  std::vector<Tensor<double>> g{Tensor<double>({2}, {1.0, std::numeric_limits<double>::quiet_NaN()})};
  CHECK_THROWS_AS(opt.step(params, g), NumericError);
  CHECK(params[0].value[0] == 0.0);
  std::vector<Tensor<double>> wrong{Tensor<double>({3})};
  CHECK_THROWS_AS(opt.step(params, wrong), ShapeError);
}

TEST_CASE("adam trajectories are bit-identical for equal inputs") {
  auto run = [] {
    CounterRng rng(8, 8);
    ParameterStore<double> params;
    params.add("w", {16});
    for (auto& v : params[0].value.values()) v = rng.uniform(-1, 1);
    Adam<double> opt(AdamConfig{.lr = 0.01});
    for (int s = 0; s < 50; ++s) {
      Tensor<double> g({16});
      for (std::int64_t i = 0; i < 16; ++i) g[i] = std::sin(params[0].value[i] * 3.0 + s);
      std::vector<Tensor<double>> grads{g};
      opt.step(params, grads);
    }
    return params[0].value.values();
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip is exact for both precisions") {
  const auto dir = std::filesystem::temp_directory_path() / "psdf_nn_ckpt";
  CounterRng rng(9, 9);
  ParameterStore<float> pf;
  pf.add("a.weight", {3, 4});
  pf.add("a.bias", {3});
  for (auto& p : pf) {
    for (auto& v : p.value.values()) v = static_cast<float>(rng.uniform(-1, 1));
  }
  save_checkpoint(dir.string(), pf, nlohmann::json{{"k", 1}}, 17);
  ParameterStore<float> back;
  back.add("a.weight", {3, 4});
  back.add("a.bias", {3});
  const auto manifest = load_checkpoint(dir.string(), back);
  CHECK(manifest.optimizer_step == 17);
  CHECK(manifest.dtype == "float32");
  CHECK(manifest.config.at("k") == 1);
  CHECK(manifest.has_tensor("a.bias"));
  CHECK(manifest.has_tensor_prefix("a."));
  CHECK_FALSE(manifest.has_tensor_prefix("generator."));
  for (std::size_t i = 0; i < pf.size(); ++i) CHECK(back[i].value.values() == pf[i].value.values());

  ParameterStore<float> wrong;
  wrong.add("a.weight", {4, 3});
  wrong.add("a.bias", {3});
  CHECK_THROWS_AS(load_checkpoint(dir.string(), wrong), DataError);

  ParameterStore<double> pd;
  pd.add("x", {5});
  for (auto& v : pd[0].value.values()) v = rng.uniform(-1, 1) / 3.0;
  save_checkpoint(dir.string(), pd, nlohmann::json::object(), 0);
  ParameterStore<double> bd;
  bd.add("x", {5});
  load_checkpoint(dir.string(), bd);
  CHECK(bd[0].value.values() == pd[0].value.values());
  std::filesystem::remove_all(dir);
}

TEST_CASE("no-grad guard and tape rewind") {
  Tape<double> tape;
  const Var x = tape.variable(Tensor<double>({1}, {2.0}));
  const auto mark = tape.mark();
  {
    NoGradGuard guard(tape);
    const Var y = scale(tape, x, 3.0);
    CHECK_FALSE(tape.requires_grad(y));
    CHECK(tape.value(y)[0] == 6.0);
  }
  CHECK(tape.grad_enabled());
  tape.rewind(mark);
  CHECK(tape.size() == mark);
}
