#include "monodtf/frustum_voxel.hpp"

#include <algorithm>
#include <cmath>

#include "monodtf/depth_binning.hpp"
#include "monodtf/parallel.hpp"

namespace monodtf {

FrustumGrid lift_features(const DepthVolume& weights, const FeaturePlane& features) {
  if (weights.rank() != 3) throw Error(ErrorCode::DimMismatch, "lift weights must be rank 3 (W, H, D)");
  if (weights.dim(0) != features.width() || weights.dim(1) != features.height()) {
    throw Error(ErrorCode::DimMismatch, "lift weights and features differ in (W_F, H_F)");
  }
  const std::size_t w = features.width(), h = features.height();
  const std::size_t nb = weights.dim(2), nc = features.channels();
  Tensor out({w, h, nb, nc});
  for (std::size_t u = 0; u < w; ++u) {
    for (std::size_t v = 0; v < h; ++v) {
      for (std::size_t d = 0; d < nb; ++d) {
        const double wt = weights(u, v, d);
        for (std::size_t c = 0; c < nc; ++c) {
          out(u, v, d, c) = static_cast<float>(wt * static_cast<double>(features.values(u, v, c)));
        }
      }
    }
  }
  return FrustumGrid(std::move(out));
}

Array<double> voxel_centers(const GridSpec& spec) {
  const auto d = spec.dims();
  Array<double> out({d.x, d.y, d.z, 3});
  for (std::size_t i = 0; i < d.count(); ++i) {
    const auto c = spec.voxel_center(spec.from_linear(i));
    for (int a = 0; a < 3; ++a) out[i * 3 + static_cast<std::size_t>(a)] = c[a];
  }
  return out;
}

std::optional<FrustumCoord> frustum_coordinate(const Eigen::Vector3d& world, const CameraCalibration& calib,
                                               const BinSpec& bins, int feature_stride, std::size_t feature_width,
                                               std::size_t feature_height) {
  const Eigen::Vector3d rect = calib.world_to_rect(world);
  if (!(rect.z() > 0.0)) return std::nullopt;
  const auto pixel = calib.project_rect(rect);
  if (!pixel) return std::nullopt;
  const double stride = feature_stride;
  const double u = (pixel->x() + 0.5) / stride - 0.5;
  const double v = (pixel->y() + 0.5) / stride - 0.5;
  if (!(u >= -0.5 && u < static_cast<double>(feature_width) - 0.5)) return std::nullopt;
  if (!(v >= -0.5 && v < static_cast<double>(feature_height) - 0.5)) return std::nullopt;
  if (rect.z() < bins.d_min() || rect.z() > bins.d_max()) return std::nullopt;
  return FrustumCoord{u, v, lid_continuous(rect.z(), bins).value - 0.5, rect.z()};
}

namespace {

struct AxisSample {
  std::size_t lo;
  std::size_t hi;
  double frac;  // weight of hi
};

AxisSample linear_sample(double coord, std::size_t n) {
  const double c = std::clamp(coord, 0.0, static_cast<double>(n - 1));
  const auto lo = static_cast<std::size_t>(std::floor(c));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return {lo, hi, c - static_cast<double>(lo)};
}

std::size_t nearest_sample(double coord, std::size_t n) {
  const double c = std::clamp(std::floor(coord + 0.5), 0.0, static_cast<double>(n - 1));
  return static_cast<std::size_t>(c);
}

}  // namespace

VoxelGrid sample_to_voxels(const FrustumGrid& frustum, const CameraCalibration& calib, const GridSpec& spec,
                           const BinSpec& bins, int feature_stride, SamplingOptions options) {
  if (feature_stride < 1) throw Error(ErrorCode::InvalidArgument, "feature stride must be >= 1");
  if (frustum.bins() != static_cast<std::size_t>(bins.num_bins())) {
    throw Error(ErrorCode::DimMismatch, "frustum depth axis differs from bin count");
  }
  const auto dims = spec.dims();
  const std::size_t nc = frustum.channels();
  const std::size_t fw = frustum.width(), fh = frustum.height(), fd = frustum.bins();
  Tensor out({dims.x, dims.y, dims.z, nc}, 0.0f);
  const Tensor& g = frustum.values;

  parallel_for(dims.count(), options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(nc);
    for (std::size_t i = begin; i < end; ++i) {
      const auto coord = frustum_coordinate(spec.voxel_center(spec.from_linear(i)), calib, bins, feature_stride, fw, fh);
      if (!coord) continue;
      float* dst = out.data().data() + i * nc;
      if (options.mode == SamplingMode::Nearest) {
        const std::size_t base =
            g.offset(nearest_sample(coord->u, fw), nearest_sample(coord->v, fh), nearest_sample(coord->depth, fd), 0);
        std::copy_n(g.data().data() + base, nc, dst);
        continue;
      }
      const auto su = linear_sample(coord->u, fw);
      const auto sv = linear_sample(coord->v, fh);
      const auto sd = linear_sample(coord->depth, fd);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int corner = 0; corner < 8; ++corner) {
        const bool bu = corner & 1, bv = corner & 2, bd = corner & 4;
        const double wt = (bu ? su.frac : 1.0 - su.frac) * (bv ? sv.frac : 1.0 - sv.frac) *
                          (bd ? sd.frac : 1.0 - sd.frac);
        if (wt == 0.0) continue;
        const std::size_t base = g.offset(bu ? su.hi : su.lo, bv ? sv.hi : sv.lo, bd ? sd.hi : sd.lo, 0);
        for (std::size_t c = 0; c < nc; ++c) acc[c] += wt * static_cast<double>(g[base + c]);
      }
      for (std::size_t c = 0; c < nc; ++c) dst[c] = static_cast<float>(acc[c]);
    }
  });
  return VoxelGrid(std::move(out), spec);
}

OccupancyField::OccupancyField(Tensor v) : values(std::move(v)) {
  if (values.rank() != 3) throw Error(ErrorCode::DimMismatch, "occupancy field must be rank 3 (X, Y, Z)");
  require_finite(values.data(), "occupancy field");
  for (float o : values.data()) {
    if (o < 0.0f || o > 1.0f) throw Error(ErrorCode::RangeError, "occupancy value outside [0, 1]");
  }
}

VoxelGrid occupancy_gate(const VoxelGrid& voxels, const OccupancyField& occupancy) {
  const auto& vs = voxels.values.shape();
  const auto& os = occupancy.values.shape();
  if (os[0] != vs[0] || os[1] != vs[1] || os[2] != vs[2]) {
    throw Error(ErrorCode::DimMismatch, "occupancy and voxel grids differ in (X, Y, Z)");
  }
  const std::size_t nc = voxels.channels();
  Tensor out(vs);
  for (std::size_t i = 0; i < occupancy.values.size(); ++i) {
    const float o = occupancy.values[i];
    for (std::size_t c = 0; c < nc; ++c) out[i * nc + c] = o * voxels.values[i * nc + c];
  }
  return VoxelGrid(std::move(out), voxels.spec);
}

BevGrid collapse_to_bev(const VoxelGrid& voxels) {
  const auto& s = voxels.values.shape();
  // (X, Y, Z, C) and (X, Y, Z*C) share the same row-major layout.
  Tensor bev({s[0], s[1], s[2] * s[3]}, voxels.values.vector());
  return BevGrid{std::move(bev), voxels.spec, s[3]};
}

VoxelGrid expand_from_bev(const BevGrid& bev) {
  const auto d = bev.spec.dims();
  if (bev.values.rank() != 3 || bev.values.dim(0) != d.x || bev.values.dim(1) != d.y ||
      bev.values.dim(2) != d.z * bev.channels_per_level) {
    throw Error(ErrorCode::DimMismatch, "BEV grid dims do not match grid spec");
  }
  return VoxelGrid(Tensor({d.x, d.y, d.z, bev.channels_per_level}, bev.values.vector()), bev.spec);
}

}  // namespace monodtf
