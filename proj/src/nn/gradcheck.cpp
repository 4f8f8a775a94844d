#include "psdf/nn/gradcheck.hpp"

#include "psdf/nn/loss.hpp"
#include "psdf/nn/ops.hpp"
#include "psdf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace psdf::nn {
namespace {

Tensor<double> random_tensor(Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

GradCheckReport check_gradients(const std::string& name, const GraphBuilder& builder,
                                std::vector<Tensor<double>> inputs, const GradCheckOptions& options,
                                std::vector<bool> checked) {
  if (checked.empty()) checked.assign(inputs.size(), true);
  CounterRng rng(options.seed, 0x67726164);

  Tensor<double> projection;
  auto evaluate = [&](bool with_grad, std::vector<Tensor<double>>* grads) {
    Tape<double> tape;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      leaves.push_back(checked[i] ? tape.variable(inputs[i]) : tape.constant(inputs[i]));
    }
    const Var out = builder(tape, leaves);
    if (projection.empty()) projection = random_tensor(tape.shape(out), rng);
    const Var loss = sum(tape, mul(tape, out, tape.constant(projection)));
    const double value = tape.value(loss)[0];
    if (with_grad) {
      tape.backward(loss);
      for (std::size_t i = 0; i < inputs.size(); ++i) grads->push_back(tape.grad(leaves[i]));
    }
    return value;
  };

  std::vector<Tensor<double>> analytic;
  evaluate(true, &analytic);

  GradCheckReport report{name, 0.0, 0, true};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!checked[i]) continue;
    std::vector<std::int64_t> entries(static_cast<std::size_t>(inputs[i].size()));
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = static_cast<std::int64_t>(k);
    if (options.max_entries_per_input && entries.size() > options.max_entries_per_input) {
      rng.shuffle(std::span<std::int64_t>(entries));
      entries.resize(options.max_entries_per_input);
    }
    for (std::int64_t k : entries) {
      const double saved = inputs[i][k];
      inputs[i][k] = saved + options.step;
      const double plus = evaluate(false, nullptr);
      inputs[i][k] = saved - options.step;
      const double minus = evaluate(false, nullptr);
      inputs[i][k] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double exact = analytic[i][k];
      const double denom = std::max({std::abs(numeric), std::abs(exact), options.floor});
      report.max_rel_error = std::max(report.max_rel_error, std::abs(numeric - exact) / denom);
      ++report.entries_checked;
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

std::vector<GradCheckReport> run_op_gradchecks(std::uint64_t seed) {
  CounterRng rng(seed, 0x6f7073);
  GradCheckOptions opts;
  opts.seed = seed;
  std::vector<GradCheckReport> reports;
  auto run = [&](const std::string& name, const GraphBuilder& b, std::vector<Tensor<double>> in,
                 std::vector<bool> checked = {}) {
    reports.push_back(check_gradients(name, b, std::move(in), opts, std::move(checked)));
  };

  run("linear",
      [](Tape<double>& t, const std::vector<Var>& v) { return linear(t, v[0], v[1], v[2]); },
      {random_tensor({5, 4}, rng), random_tensor({3, 4}, rng), random_tensor({3}, rng)});
  run("relu", [](Tape<double>& t, const std::vector<Var>& v) { return relu(t, v[0]); },
      {random_tensor({4, 6}, rng)});
  run("tanh", [](Tape<double>& t, const std::vector<Var>& v) { return tanh(t, v[0]); },
      {random_tensor({4, 6}, rng, -2.0, 2.0)});
  run("add", [](Tape<double>& t, const std::vector<Var>& v) { return add(t, v[0], v[1]); },
      {random_tensor({3, 5}, rng), random_tensor({3, 5}, rng)});
  run("mul", [](Tape<double>& t, const std::vector<Var>& v) { return mul(t, v[0], v[1]); },
      {random_tensor({3, 5}, rng), random_tensor({3, 5}, rng)});
  run("concat_cols",
      [](Tape<double>& t, const std::vector<Var>& v) {
        const Var parts[] = {v[0], v[1], v[0]};
        return concat(t, std::span<const Var>(parts), 1);
      },
      {random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)});
  run("concat_rows",
      [](Tape<double>& t, const std::vector<Var>& v) {
        const Var parts[] = {v[0], v[1]};
        return concat(t, std::span<const Var>(parts), 0);
      },
      {random_tensor({2, 3}, rng), random_tensor({4, 3}, rng)});
  run("reshape", [](Tape<double>& t, const std::vector<Var>& v) { return reshape(t, v[0], {2, 6}); },
      {random_tensor({4, 3}, rng)});
  run("sum", [](Tape<double>& t, const std::vector<Var>& v) { return sum(t, v[0]); },
      {random_tensor({3, 3}, rng)});
  run("broadcast_rows", [](Tape<double>& t, const std::vector<Var>& v) { return broadcast_rows(t, v[0], 4); },
      {random_tensor({1, 5}, rng)});
  run("conv2d_stride1",
      [](Tape<double>& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2], 1); },
      {random_tensor({2, 5, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
  run("conv2d_stride2",
      [](Tape<double>& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2], 2); },
      {random_tensor({2, 7, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
  run("max_pool2d", [](Tape<double>& t, const std::vector<Var>& v) { return max_pool2d(t, v[0]); },
      {random_tensor({2, 5, 6}, rng)});
  run("global_avg_pool", [](Tape<double>& t, const std::vector<Var>& v) { return global_avg_pool(t, v[0]); },
      {random_tensor({3, 4, 5}, rng)});
  run("chw_to_hwc", [](Tape<double>& t, const std::vector<Var>& v) { return chw_to_hwc(t, v[0]); },
      {random_tensor({3, 4, 5}, rng)});

  // Queries stay away from integer cell boundaries where the coordinate
  // derivative jumps.
  Tensor<double> pixels({6, 2});
  for (std::int64_t q = 0; q < 6; ++q) {
    pixels[2 * q] = std::floor(rng.uniform(0.0, 7.0)) * (136.0 / 8.0) + rng.uniform(2.0, 14.0);
    pixels[2 * q + 1] = std::floor(rng.uniform(0.0, 5.0)) * (136.0 / 6.0) + rng.uniform(2.0, 20.0);
  }
  BilinearOptions bopts;
  bopts.coordinate_grad = true;
  run("bilinear_sample",
      [bopts](Tape<double>& t, const std::vector<Var>& v) { return bilinear_sample(t, v[0], v[1], bopts); },
      {random_tensor({7, 9, 4}, rng), pixels});

  LossConfig cfg;
  Tensor<double> gt({8});
  for (std::int64_t i = 0; i < 8; ++i) gt[i] = (i % 2 ? 0.005 : 0.3) * (i % 3 ? 1.0 : -1.0);
  run("weighted_sdf_loss",
      [cfg, gt](Tape<double>& t, const std::vector<Var>& v) {
        return weighted_sdf_loss(t, v[0], gt.span(), cfg);
      },
      {random_tensor({8, 1}, rng)});
  return reports;
}

}  // namespace psdf::nn
