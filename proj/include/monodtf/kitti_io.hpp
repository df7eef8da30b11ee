#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "monodtf/core.hpp"
#include "monodtf/occ_labels.hpp"

namespace monodtf {

// --- calibration -----------------------------------------------------------

/// Parses the P2, R0_rect and Tr_velo_to_cam lines of a KITTI object calib
/// file. Other keys are ignored.
CameraCalibration parse_calib(std::string_view text);

/// Writes the three consumed keys with round-trip precision.
std::string format_calib(const CameraCalibration& calib);

// --- labels ----------------------------------------------------------------

struct KittiLabelRecord {
  std::string category;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};  // left, top, right, bottom (pixels)
  double h = 0.0, w = 0.0, l = 0.0;
  Eigen::Vector3d location = Eigen::Vector3d::Zero();  // rectified camera frame, bottom-face center
  double rotation_y = 0.0;

  bool dont_care() const { return category == "DontCare"; }
};

/// One record per non-blank line of 15 whitespace-separated fields.
std::vector<KittiLabelRecord> parse_labels(std::string_view text);
std::string format_label(const KittiLabelRecord& rec);

/// Lift the bottom-face center to the geometric center and move the box into
/// the world frame; rotation_y becomes a yaw about world vertical.
OrientedBox3D label_to_world_box(const KittiLabelRecord& rec, const CameraCalibration& calib);

/// Exact inverse of label_to_world_box for the pose fields (location,
/// rotation_y, dims); the remaining fields are copied from `base`.
KittiLabelRecord world_box_to_label(const OrientedBox3D& box, const CameraCalibration& calib,
                                    const KittiLabelRecord& base);

// --- velodyne --------------------------------------------------------------

/// Packed little-endian float32 (x, y, z, reflectance) records; reflectance
/// is dropped.
PointCloud read_velodyne(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_velodyne(const PointCloud& points);

// --- PNG -------------------------------------------------------------------

/// Decoded PNG samples, row-major with interleaved channels.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

RawImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RawImage& image);

inline constexpr double kDepthPngScale = 256.0;

/// 16-bit single-channel depth PNG: depth = raw / 256, raw 0 = missing.
DepthMap read_depth_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_depth_png(const DepthMap& depth);

}  // namespace monodtf
