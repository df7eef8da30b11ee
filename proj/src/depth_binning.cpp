#include "monodtf/depth_binning.hpp"

#include <algorithm>
#include <cmath>

namespace monodtf {

double lid_delta(const BinSpec& spec) {
  const double d = spec.num_bins();
  return 2.0 * (spec.d_max() - spec.d_min()) / (d * (d + 1.0));
}

std::vector<double> lid_edges(const BinSpec& spec) {
  const double delta = lid_delta(spec);
  const int n = spec.num_bins();
  std::vector<double> edges(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    edges[static_cast<std::size_t>(i)] = spec.d_min() + delta * (static_cast<double>(i) * (i + 1) / 2.0);
  }
  edges.back() = spec.d_max();
  return edges;
}

ContinuousBin lid_continuous(double depth, const BinSpec& spec) {
  if (!std::isfinite(depth)) throw Error(ErrorCode::NonFiniteInput, "depth must be finite");
  if (depth < spec.d_min()) return {0.0, true};
  if (depth > spec.d_max()) return {static_cast<double>(spec.num_bins()), true};
  const double z = -0.5 + 0.5 * std::sqrt(1.0 + 8.0 * (depth - spec.d_min()) / lid_delta(spec));
  return {std::clamp(z, 0.0, static_cast<double>(spec.num_bins())), false};
}

BinIndex lid_index(double depth, const BinSpec& spec) {
  const auto c = lid_continuous(depth, spec);
  const int idx = static_cast<int>(std::floor(c.value));
  return {std::clamp(idx, 0, spec.num_bins() - 1), c.out_of_range};
}

double lid_depth_of(double bin_coord, const BinSpec& spec) {
  if (!(bin_coord >= 0.0 && bin_coord <= spec.num_bins())) {
    throw Error(ErrorCode::OutOfRange, "bin coordinate outside [0, D]");
  }
  return spec.d_min() + lid_delta(spec) * bin_coord * (bin_coord + 1.0) / 2.0;
}

}  // namespace monodtf
