#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "monodtf/core.hpp"

namespace monodtf {

/// Volumes over (W_F, H_F, D) in double precision.
using DepthVolume = Array<double>;

/// Per-pixel one-hot depth bins. Pixels with missing depth are all-zero and
/// carry bin -1.
struct OneHotVolume {
  DepthVolume values;
  std::vector<int> bins;
  std::vector<std::uint8_t> clamped;  // depth was outside [d_min, d_max]

  std::size_t width() const { return values.dim(0); }
  std::size_t height() const { return values.dim(1); }
  std::size_t num_bins() const { return values.dim(2); }
  int bin(std::size_t u, std::size_t v) const { return bins[u * height() + v]; }
  bool valid(std::size_t u, std::size_t v) const { return bin(u, v) >= 0; }
  std::size_t valid_count() const;
};

OneHotVolume encode_one_hot(const DepthMap& depth, const BinSpec& spec);

/// Per-pixel probabilities over depth bins; each pixel sums to 1.
class DistributionVolume {
 public:
  static constexpr double kSumTolerance = 1e-5;

  /// Validates non-negativity and unit per-pixel sums (RangeError otherwise).
  static DistributionVolume from_values(DepthVolume values);

  const DepthVolume& values() const noexcept { return values_; }

 private:
  explicit DistributionVolume(DepthVolume values) : values_(std::move(values)) {}
  DepthVolume values_;
};

/// Max-shifted exponentiate-and-normalize over the bin axis.
DistributionVolume normalize_distribution(const DepthVolume& logits);

/// Independent [0, 1] activations per depth bin. No per-pixel sum constraint,
/// so several bins may saturate at once to describe object thickness.
class ThicknessField {
 public:
  explicit ThicknessField(DepthVolume values);

  const DepthVolume& values() const noexcept { return values_; }
  std::size_t width() const { return values_.dim(0); }
  std::size_t height() const { return values_.dim(1); }
  std::size_t num_bins() const { return values_.dim(2); }

 private:
  DepthVolume values_;
};

/// m_d = 1 iff |d - z'| > l or d = z'. Pixels without depth get an all-zero
/// mask, which removes them from the thickness loss.
struct ExtensionMask {
  DepthVolume values;
  int radius = 0;
};

ExtensionMask extension_mask(const OneHotVolume& one_hot, int radius);

/// Elementwise product of the one-hot target and the mask.
DepthVolume soft_extended_target(const OneHotVolume& one_hot, const ExtensionMask& mask);

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// Floor applied to logarithm arguments.
inline constexpr double kLogEpsilon = 1e-6;

struct ThicknessLoss {
  double loss = 0.0;
  DepthVolume grad;
};

/// Binary focal loss summed over mask-1 bins and divided by W_F * H_F.
/// grad is the exact derivative of `loss` with respect to each prediction;
/// mask-0 bins get exactly zero loss and gradient. The reduction order is
/// fixed, so the result does not depend on `threads`.
ThicknessLoss thickness_focal_loss(const ThicknessField& pred, const DepthVolume& target, const ExtensionMask& mask,
                                   FocalParams params = {}, unsigned threads = 1);

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries within h of 0 or 1
};

/// Central finite-difference comparison of the analytic gradient.
GradientCheck check_thickness_gradient(const ThicknessField& pred, const DepthVolume& target,
                                       const ExtensionMask& mask, FocalParams params = {}, double h = 1e-4);

struct ThicknessRun {
  int start_bin = 0;
  int bin_count = 0;
  double start_depth = 0.0;
  double end_depth = 0.0;
  bool operator==(const ThicknessRun&) const = default;
};

/// Maximal runs of consecutive bins with value >= threshold, with metric
/// extents taken from the LID edges.
std::vector<ThicknessRun> thickness_profile(std::span<const double> ray, double threshold, const BinSpec& spec);

/// L_org + L_occ + L_thickness.
double compose_total_loss(double l_org, double l_occ, double l_thickness);

}  // namespace monodtf
