#include "monodtf/depth_repr.hpp"

#include <algorithm>
#include <cmath>

#include "monodtf/depth_binning.hpp"
#include "monodtf/parallel.hpp"

namespace monodtf {

namespace {

void require_depth_volume(const DepthVolume& v, const char* what) {
  if (v.rank() != 3) throw Error(ErrorCode::DimMismatch, std::string(what) + " must be rank 3 (W, H, D)");
}

void require_same_shape(const DepthVolume& a, const DepthVolume& b, const char* what) {
  if (a.shape() != b.shape()) throw Error(ErrorCode::DimMismatch, std::string(what) + ": shapes differ");
}

// gamma * base^(gamma - 1) * log_value, taking the finite limit 0 whenever
// log_value is 0 (base == 0 only happens together with log(1)).
double power_rule_log(double base, double gamma, double log_value) {
  if (gamma == 0.0 || log_value == 0.0) return 0.0;
  return gamma * std::pow(base, gamma - 1.0) * log_value;
}

struct FocalEval {
  double value;
  double derivative;
};

// -alpha t (1-p)^g log(p) - (1-alpha)(1-t) p^g log(1-p), logs floored at eps.
FocalEval focal_binary(double p, double t, const FocalParams& fp) {
  const double q = 1.0 - p;
  const double log_p = std::log(std::max(p, kLogEpsilon));
  const double log_q = std::log(std::max(q, kLogEpsilon));
  double value = 0.0;
  double deriv = 0.0;
  if (t != 0.0) {
    const double w = fp.alpha * t;
    const double qg = std::pow(q, fp.gamma);
    value += w * qg * -log_p;
    deriv += w * (power_rule_log(q, fp.gamma, log_p) - (p >= kLogEpsilon ? qg / p : 0.0));
  }
  if (t != 1.0) {
    const double w = (1.0 - fp.alpha) * (1.0 - t);
    const double pg = std::pow(p, fp.gamma);
    value += w * pg * -log_q;
    deriv += w * (-power_rule_log(p, fp.gamma, log_q) + (q >= kLogEpsilon ? pg / q : 0.0));
  }
  return {value, deriv};
}

void validate_focal_params(const FocalParams& fp) {
  if (!(fp.alpha > 0.0 && fp.alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "focal alpha must lie in (0, 1)");
  if (!(fp.gamma >= 0.0) || !std::isfinite(fp.gamma)) {
    throw Error(ErrorCode::InvalidArgument, "focal gamma must be finite and >= 0");
  }
}

// Sum of focal terms over mask-1 bins of each pixel, in pixel order.
double focal_sum(std::span<const double> pred, std::span<const double> target, std::span<const double> mask,
                 std::size_t pixels, std::size_t bins, const FocalParams& fp, std::span<double> grad, double grad_scale,
                 unsigned threads) {
  std::vector<double> partial(pixels, 0.0);
  parallel_for(pixels, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t px = begin; px < end; ++px) {
      double acc = 0.0;
      for (std::size_t d = 0; d < bins; ++d) {
        const std::size_t i = px * bins + d;
        if (mask[i] == 0.0) continue;
        const auto e = focal_binary(pred[i], target[i], fp);
        acc += e.value;
        if (!grad.empty()) grad[i] = e.derivative * grad_scale;
      }
      partial[px] = acc;
    }
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t OneHotVolume::valid_count() const {
  return static_cast<std::size_t>(std::count_if(bins.begin(), bins.end(), [](int b) { return b >= 0; }));
}

OneHotVolume encode_one_hot(const DepthMap& depth, const BinSpec& spec) {
  const std::size_t w = depth.width();
  const std::size_t h = depth.height();
  const auto nb = static_cast<std::size_t>(spec.num_bins());
  OneHotVolume out{DepthVolume({w, h, nb}, 0.0), std::vector<int>(w * h, -1), std::vector<std::uint8_t>(w * h, 0)};
  for (std::size_t u = 0; u < w; ++u) {
    for (std::size_t v = 0; v < h; ++v) {
      if (!depth.valid(u, v)) continue;
      const auto b = lid_index(depth.at(u, v), spec);
      out.bins[u * h + v] = b.index;
      out.clamped[u * h + v] = b.out_of_range ? 1 : 0;
      out.values(u, v, b.index) = 1.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

DistributionVolume DistributionVolume::from_values(DepthVolume values) {
  require_depth_volume(values, "distribution volume");
  require_finite(values.data(), "distribution volume");
  const std::size_t bins = values.dim(2);
  const std::size_t pixels = values.size() / std::max<std::size_t>(bins, 1);
  for (std::size_t px = 0; px < pixels; ++px) {
    double sum = 0.0;
    for (std::size_t d = 0; d < bins; ++d) {
      const double p = values[px * bins + d];
      if (p < 0.0) throw Error(ErrorCode::RangeError, "distribution entry is negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) >= kSumTolerance) {
      throw Error(ErrorCode::RangeError, "distribution pixel does not sum to 1");
    }
  }
  return DistributionVolume(std::move(values));
}

DistributionVolume normalize_distribution(const DepthVolume& logits) {
  require_depth_volume(logits, "logits");
  require_finite(logits.data(), "logits");
  DepthVolume out(logits.shape());
  const std::size_t bins = logits.dim(2);
  const std::size_t pixels = logits.size() / std::max<std::size_t>(bins, 1);
  for (std::size_t px = 0; px < pixels; ++px) {
    const auto row = logits.data().subspan(px * bins, bins);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t d = 0; d < bins; ++d) {
      const double e = std::exp(row[d] - peak);
      out[px * bins + d] = e;
      sum += e;
    }
    for (std::size_t d = 0; d < bins; ++d) out[px * bins + d] /= sum;
  }
  return DistributionVolume::from_values(std::move(out));
}

ThicknessField::ThicknessField(DepthVolume values) : values_(std::move(values)) {
  require_depth_volume(values_, "thickness field");
  require_finite(values_.data(), "thickness field");
  for (double f : values_.data()) {
    if (f < 0.0 || f > 1.0) throw Error(ErrorCode::RangeError, "thickness field entry outside [0, 1]");
  }
}

// ---------------------------------------------------------------------------

ExtensionMask extension_mask(const OneHotVolume& one_hot, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "extension radius must be >= 0");
  const std::size_t w = one_hot.width();
  const std::size_t h = one_hot.height();
  const auto nb = static_cast<int>(one_hot.num_bins());
  ExtensionMask mask{DepthVolume(one_hot.values.shape(), 0.0), radius};
  for (std::size_t u = 0; u < w; ++u) {
    for (std::size_t v = 0; v < h; ++v) {
      const int z = one_hot.bin(u, v);
      if (z < 0) continue;
      for (int d = 0; d < nb; ++d) {
        const int dist = std::abs(d - z);
        mask.values(u, v, d) = (dist > radius || d == z) ? 1.0 : 0.0;
      }
    }
  }
  return mask;
}

DepthVolume soft_extended_target(const OneHotVolume& one_hot, const ExtensionMask& mask) {
  require_same_shape(one_hot.values, mask.values, "soft_extended_target");
  DepthVolume out(one_hot.values.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = one_hot.values[i] * mask.values[i];
  return out;
}

// ---------------------------------------------------------------------------

ThicknessLoss thickness_focal_loss(const ThicknessField& pred, const DepthVolume& target, const ExtensionMask& mask,
                                   FocalParams params, unsigned threads) {
  validate_focal_params(params);
  require_same_shape(pred.values(), target, "thickness_focal_loss target");
  require_same_shape(pred.values(), mask.values, "thickness_focal_loss mask");
  require_finite(target.data(), "target");
  require_finite(mask.values.data(), "mask");
  const std::size_t pixels = pred.width() * pred.height();
  const double norm = static_cast<double>(pixels);
  ThicknessLoss out{0.0, DepthVolume(pred.values().shape(), 0.0)};
  const double sum = focal_sum(pred.values().data(), target.data(), mask.values.data(), pixels, pred.num_bins(),
                               params, out.grad.data(), 1.0 / norm, threads);
  out.loss = sum / norm;
  return out;
}

GradientCheck check_thickness_gradient(const ThicknessField& pred, const DepthVolume& target,
                                       const ExtensionMask& mask, FocalParams params, double h) {
  const auto analytic = thickness_focal_loss(pred, target, mask, params);
  const std::size_t pixels = pred.width() * pred.height();
  const double norm = static_cast<double>(pixels);
  std::vector<double> probe(pred.values().data().begin(), pred.values().data().end());
  auto eval = [&] {
    return focal_sum(probe, target.data(), mask.values.data(), pixels, pred.num_bins(), params, {}, 0.0, 1) / norm;
  };
  GradientCheck report;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double p = probe[i];
    if (p - h < 0.0 || p + h > 1.0) {
      ++report.skipped;
      continue;
    }
    probe[i] = p + h;
    const double up = eval();
    probe[i] = p - h;
    const double down = eval();
    probe[i] = p;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.grad[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-10});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(a - numeric) / scale);
    ++report.checked;
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<ThicknessRun> thickness_profile(std::span<const double> ray, double threshold, const BinSpec& spec) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  if (ray.size() != static_cast<std::size_t>(spec.num_bins())) {
    throw Error(ErrorCode::DimMismatch, "ray length differs from bin count");
  }
  const auto edges = lid_edges(spec);
  std::vector<ThicknessRun> runs;
  const int n = spec.num_bins();
  int d = 0;
  while (d < n) {
    if (!(ray[static_cast<std::size_t>(d)] >= threshold)) {
      ++d;
      continue;
    }
    const int start = d;
    while (d < n && ray[static_cast<std::size_t>(d)] >= threshold) ++d;
    runs.push_back({start, d - start, edges[static_cast<std::size_t>(start)], edges[static_cast<std::size_t>(d)]});
  }
  return runs;
}

double compose_total_loss(double l_org, double l_occ, double l_thickness) {
  for (double v : {l_org, l_occ, l_thickness}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "loss term is not finite");
    if (v < 0.0) throw Error(ErrorCode::RangeError, "loss term is negative");
  }
  return l_org + l_occ + l_thickness;
}

}  // namespace monodtf
