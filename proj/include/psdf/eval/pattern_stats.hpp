#pragma once

#include "psdf/model/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace psdf::eval {

/// For each pattern index i, the mean over probes of |offset_i|.
template <typename T>
std::vector<double> pattern_offset_stats(const model::SdfModel<T>& net, std::span<const model::Vec3> probes);

/// Header `pattern_index,mean_offset`, one row per pattern point (1-based).
void write_pattern_stats_csv(const std::vector<double>& means, const std::string& path);
std::string format_pattern_stats(const std::vector<double>& means);

}  // namespace psdf::eval
