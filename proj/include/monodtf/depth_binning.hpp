#pragma once

#include <vector>

#include "monodtf/core.hpp"

namespace monodtf {

/// Linear-increasing discretization: bin i has width delta * (i + 1), with
/// delta = 2 (d_max - d_min) / (D (D + 1)).
double lid_delta(const BinSpec& spec);

/// num_bins + 1 strictly increasing edges spanning [d_min, d_max].
std::vector<double> lid_edges(const BinSpec& spec);

struct ContinuousBin {
  double value = 0.0;          // in [0, D]
  bool out_of_range = false;   // depth was outside [d_min, d_max] and got clamped
};

struct BinIndex {
  int index = 0;               // in [0, D - 1]
  bool out_of_range = false;
};

/// Continuous bin coordinate z' of a metric depth.
ContinuousBin lid_continuous(double depth, const BinSpec& spec);

BinIndex lid_index(double depth, const BinSpec& spec);

/// Inverse of lid_continuous. Throws OutOfRange outside [0, D].
double lid_depth_of(double bin_coord, const BinSpec& spec);

}  // namespace monodtf
