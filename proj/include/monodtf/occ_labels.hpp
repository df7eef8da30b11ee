#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "monodtf/core.hpp"

namespace monodtf {

/// Tri-state voxel label. The numeric values are the TensorBlob encoding and
/// also the merge order: OCCUPIED > FREE > UNKNOWN.
enum class OccupancyState : std::int8_t { Unknown = -1, Free = 0, Occupied = 1 };

struct LabelCounts {
  std::size_t occupied = 0;
  std::size_t free = 0;
  std::size_t unknown = 0;
};

class OccupancyLabelGrid {
 public:
  explicit OccupancyLabelGrid(GridSpec spec, OccupancyState fill = OccupancyState::Unknown);

  /// Decode a (X, Y, Z) tensor with values {1, 0, -1}.
  static OccupancyLabelGrid from_tensor(const Tensor& tensor, const GridSpec& spec);
  Tensor to_tensor() const;

  const GridSpec& spec() const noexcept { return spec_; }
  OccupancyState at(const VoxelIndex& idx) const { return states_[spec_.linear_index(idx)]; }
  void set(const VoxelIndex& idx, OccupancyState s) { states_[spec_.linear_index(idx)] = s; }
  std::span<const OccupancyState> states() const noexcept { return states_; }
  std::span<OccupancyState> states() noexcept { return states_; }
  LabelCounts counts() const;

  bool operator==(const OccupancyLabelGrid&) const = default;

 private:
  GridSpec spec_;
  std::vector<OccupancyState> states_;
};

using PointCloud = std::vector<Eigen::Vector3d>;

/// Cuboid with geometric center, (h, w, l) along (z, y, x) of its own frame,
/// and yaw about world vertical; yaw 0 heads along +x.
class OrientedBox3D {
 public:
  OrientedBox3D(const Eigen::Vector3d& center, double h, double w, double l, double yaw);

  const Eigen::Vector3d& center() const noexcept { return center_; }
  double h() const noexcept { return h_; }
  double w() const noexcept { return w_; }
  double l() const noexcept { return l_; }
  double yaw() const noexcept { return yaw_; }

  /// 8 world-frame corners; bit k of the index selects the + side of
  /// (length, width, height) for k = 0, 1, 2.
  std::array<Eigen::Vector3d, 8> corners() const;

 private:
  Eigen::Vector3d center_;
  double h_, w_, l_, yaw_;
};

/// Wrap an angle into (-pi, pi].
double normalize_angle(double radians);

struct RayTraversal {
  std::vector<VoxelIndex> passed;   // cells crossed before the endpoint, in order
  std::optional<VoxelIndex> hit;    // cell containing the endpoint, if in the grid
};

/// Amanatides-Woo traversal of the segment clipped to the grid box. Only cells
/// the segment crosses with positive length are listed.
RayTraversal traverse_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& endpoint, const GridSpec& spec);

/// Point cells are OCCUPIED; cells crossed by an origin->point ray and holding
/// no point are FREE; the rest stay UNKNOWN.
OccupancyLabelGrid point_cloud_labels(const PointCloud& points, const Eigen::Vector3d& sensor_origin,
                                      const GridSpec& spec, unsigned threads = 1);

inline constexpr double kDefaultShrinkScale = 0.8;

OrientedBox3D shrink_box(const OrientedBox3D& box, double scale);

/// Closed containment test in the box frame.
bool point_in_box(const Eigen::Vector3d& p, const OrientedBox3D& box);

/// Cells whose center lies in any box shrunk by `scale` are OCCUPIED; the rest
/// are UNKNOWN.
OccupancyLabelGrid box_labels(std::span<const OrientedBox3D> boxes, double scale, const GridSpec& spec);

OccupancyLabelGrid union_labels(const OccupancyLabelGrid& a, const OccupancyLabelGrid& b);

}  // namespace monodtf
