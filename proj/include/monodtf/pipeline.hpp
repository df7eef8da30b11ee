#pragma once

#include <optional>
#include <vector>

#include "monodtf/config.hpp"
#include "monodtf/kitti_io.hpp"
#include "monodtf/occ_labels.hpp"

namespace monodtf {

struct EncodedDepth {
  OneHotVolume one_hot;
  std::optional<ExtensionMask> mask;
  std::optional<DepthVolume> target;
};

/// Downsample a full-resolution depth map to feature resolution and encode
/// it; with `with_target` also build the extension mask and soft target.
EncodedDepth encode_depth(const DepthMap& full_res, const PipelineConfig& config, bool with_target);

/// Ray labels from the camera center plus labels from shrunken boxes of the
/// configured categories, merged by the OCCUPIED > FREE > UNKNOWN order.
OccupancyLabelGrid build_occupancy_labels(const PointCloud& points, const std::vector<KittiLabelRecord>& labels,
                                          const CameraCalibration& calib, const PipelineConfig& config);

struct PipelineResult {
  VoxelGrid voxels;
  BevGrid bev;
};

/// encode -> lift -> sample -> optional gate -> collapse. When `thickness` is
/// given it replaces the one-hot weights during lifting. Errors are prefixed
/// with the failing stage.
PipelineResult run_pipeline(const DepthMap& full_res_depth, const FeaturePlane& features,
                            const CameraCalibration& calib, const PipelineConfig& config,
                            const ThicknessField* thickness = nullptr, const OccupancyField* occupancy = nullptr);

}  // namespace monodtf
