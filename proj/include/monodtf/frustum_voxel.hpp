#pragma once

#include <vector>

#include "monodtf/core.hpp"
#include "monodtf/depth_repr.hpp"

namespace monodtf {

/// G(u, v, d, c) = weights(u, v, d) * features(u, v, c), evaluated in double
/// and rounded once to float.
FrustumGrid lift_features(const DepthVolume& weights, const FeaturePlane& features);

/// World-frame centers of all cells, shape (X, Y, Z, 3).
Array<double> voxel_centers(const GridSpec& spec);

enum class SamplingMode { Trilinear, Nearest };

struct SamplingOptions {
  SamplingMode mode = SamplingMode::Trilinear;
  unsigned threads = 1;
};

/// Continuous frustum coordinates of a world point: feature column, feature
/// row and depth-bin sample position. Bin d is centered at coordinate d, so
/// depth = lid_continuous(z) - 0.5.
struct FrustumCoord {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  double camera_z = 0.0;
};

/// nullopt when the point is behind the camera, projects outside the feature
/// plane extent [-0.5, W_F - 0.5) x [-0.5, H_F - 0.5), or has camera depth
/// outside [d_min, d_max].
std::optional<FrustumCoord> frustum_coordinate(const Eigen::Vector3d& world, const CameraCalibration& calib,
                                               const BinSpec& bins, int feature_stride, std::size_t feature_width,
                                               std::size_t feature_height);

/// Resample the frustum at every voxel center. Points outside the frustum get
/// zeros; inside, interpolation clamps to the border cells.
VoxelGrid sample_to_voxels(const FrustumGrid& frustum, const CameraCalibration& calib, const GridSpec& spec,
                           const BinSpec& bins, int feature_stride, SamplingOptions options = {});

/// Occupancy values in [0, 1], shape (X, Y, Z).
struct OccupancyField {
  explicit OccupancyField(Tensor values);
  Tensor values;
};

/// V~(i, j, k, c) = O(i, j, k) * V(i, j, k, c).
VoxelGrid occupancy_gate(const VoxelGrid& voxels, const OccupancyField& occupancy);

/// Voxel features with the vertical axis stacked into channels:
/// BEV(i, j, k * C + c) = V(i, j, k, c).
struct BevGrid {
  Tensor values;  // (X, Y, Z * C)
  GridSpec spec;
  std::size_t channels_per_level = 0;
};

BevGrid collapse_to_bev(const VoxelGrid& voxels);
VoxelGrid expand_from_bev(const BevGrid& bev);

}  // namespace monodtf
