#include "monodtf/pipeline.hpp"

#include <algorithm>

namespace monodtf {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace

EncodedDepth encode_depth(const DepthMap& full_res, const PipelineConfig& config, bool with_target) {
  const DepthMap depth = downsample_depth(full_res, config.feature_stride, config.downsample);
  EncodedDepth out{encode_one_hot(depth, config.bins), std::nullopt, std::nullopt};
  if (with_target) {
    out.mask = extension_mask(out.one_hot, config.require_extension_radius());
    out.target = soft_extended_target(out.one_hot, *out.mask);
  }
  return out;
}

OccupancyLabelGrid build_occupancy_labels(const PointCloud& points, const std::vector<KittiLabelRecord>& labels,
                                          const CameraCalibration& calib, const PipelineConfig& config) {
  const auto from_points = point_cloud_labels(points, calib.camera_center_world(), config.grid, config.threads);
  std::vector<OrientedBox3D> boxes;
  for (const auto& rec : labels) {
    if (rec.dont_care()) continue;
    if (std::find(config.categories.begin(), config.categories.end(), rec.category) == config.categories.end()) continue;
    boxes.push_back(label_to_world_box(rec, calib));
  }
  return union_labels(from_points, box_labels(boxes, config.shrink_scale, config.grid));
}

PipelineResult run_pipeline(const DepthMap& full_res_depth, const FeaturePlane& features,
                            const CameraCalibration& calib, const PipelineConfig& config,
                            const ThicknessField* thickness, const OccupancyField* occupancy) {
  const auto encoded = stage("encode", [&] { return encode_depth(full_res_depth, config, false); });
  const DepthVolume& weights = thickness ? thickness->values() : encoded.one_hot.values;
  if (thickness && weights.shape() != encoded.one_hot.values.shape()) {
    throw Error(ErrorCode::DimMismatch, "stage 'lift': thickness field dims differ from the encoded depth");
  }
  const auto frustum = stage("lift", [&] { return lift_features(weights, features); });
  auto voxels = stage("sample", [&] {
    return sample_to_voxels(frustum, calib, config.grid, config.bins, config.feature_stride,
                            {config.sampling, config.threads});
  });
  if (occupancy) voxels = stage("gate", [&] { return occupancy_gate(voxels, *occupancy); });
  auto bev = stage("collapse", [&] { return collapse_to_bev(voxels); });
  return {std::move(voxels), std::move(bev)};
}

}  // namespace monodtf
