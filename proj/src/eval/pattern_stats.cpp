#include "psdf/eval/pattern_stats.hpp"

#include "psdf/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace psdf::eval {

template <typename T>
std::vector<double> pattern_offset_stats(const model::SdfModel<T>& net, std::span<const model::Vec3> probes) {
  const int n = net.pattern_count();
  std::vector<double> means(static_cast<std::size_t>(n), 0.0);
  if (probes.empty() || n == 0) return means;
  const auto offsets = net.pattern_offsets(probes);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (int i = 0; i < n; ++i) means[i] += offsets[p * n + i].norm();
  }
  for (auto& m : means) m /= static_cast<double>(probes.size());
  return means;
}

void write_pattern_stats_csv(const std::vector<double>& means, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "pattern_index,mean_offset\n";
  char buf[64];
  for (std::size_t i = 0; i < means.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i + 1, means[i]);
    out << buf;
  }
  if (!out) throw DataError("failed writing " + path);
}

std::string format_pattern_stats(const std::vector<double>& means) {
  std::ostringstream out;
  out << "pattern point  mean offset\n";
  char buf[64];
  for (std::size_t i = 0; i < means.size(); ++i) {
    std::snprintf(buf, sizeof buf, "p%-13zu %.6f\n", i + 1, means[i]);
    out << buf;
  }
  return out.str();
}

template std::vector<double> pattern_offset_stats<float>(const model::SdfModel<float>&, std::span<const model::Vec3>);
template std::vector<double> pattern_offset_stats<double>(const model::SdfModel<double>&, std::span<const model::Vec3>);

}  // namespace psdf::eval
