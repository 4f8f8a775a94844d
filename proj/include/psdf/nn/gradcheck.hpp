#pragma once

#include "psdf/nn/tape.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace psdf::nn {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Relative errors are measured against max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
  /// Entries checked per input tensor; 0 checks every entry.
  std::size_t max_entries_per_input = 0;
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

/// Builds a scalar-reducible graph from leaf inputs.
using GraphBuilder = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

/// Compares the tape's analytic gradient of sum(R * builder(inputs)), with a
/// fixed random R, against central finite differences for the inputs whose
/// `checked` flag is set (all inputs when `checked` is empty).
GradCheckReport check_gradients(const std::string& name, const GraphBuilder& builder,
                                std::vector<Tensor<double>> inputs, const GradCheckOptions& options = {},
                                std::vector<bool> checked = {});

/// One report per op in the nn op set, on random small shapes.
std::vector<GradCheckReport> run_op_gradchecks(std::uint64_t seed = 7);

}  // namespace psdf::nn
