#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace monodtf {

enum class ErrorCode {
  InvalidArgument,
  NonCommensurateRange,
  BadMagic,
  TruncatedPayload,
  DimOverflow,
  DimMismatch,
  NonFiniteInput,
  RangeError,
  OutOfRange,
  SingularCalibration,
  DegenerateRay,
  BadScale,
  SpecMismatch,
  MissingKey,
  MalformedNumber,
  WrongArity,
  WrongFieldCount,
  TruncatedRecord,
  WrongBitDepth,
  WrongChannelCount,
  SliceOutOfRange,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Dense row-major n-dimensional array. A rank-0 array holds one element.
template <typename T>
class Array {
 public:
  using Shape = std::vector<std::size_t>;

  Array() : data_(1) {}

  explicit Array(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Array(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw Error(ErrorCode::DimMismatch, "array data size does not match shape");
    }
  }

  static std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& vector() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Idx>
  std::size_t offset(Idx... idx) const {
    static_assert(sizeof...(Idx) > 0);
    const std::size_t indices[] = {static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t a = 0; a < sizeof...(Idx); ++a) off = off * shape_[a] + indices[a];
    return off;
  }

  template <typename... Idx>
  T& operator()(Idx... idx) {
    return data_[offset(idx...)];
  }
  template <typename... Idx>
  const T& operator()(Idx... idx) const {
    return data_[offset(idx...)];
  }

  bool operator==(const Array&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// TensorBlob payload type: 32-bit reals.
using Tensor = Array<float>;

struct Interval {
  double min = 0.0;
  double max = 0.0;
  double length() const noexcept { return max - min; }
  bool operator==(const Interval&) const = default;
};

struct GridDims {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t z = 0;
  std::size_t count() const noexcept { return x * y * z; }
  auto operator<=>(const GridDims&) const = default;
};

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  auto operator<=>(const VoxelIndex&) const = default;
};

/// Axis-aligned voxel grid in the LiDAR/ego frame (x forward, y left, z up)
/// with isotropic cells.
class GridSpec {
 public:
  GridSpec(Interval x, Interval y, Interval z, double voxel_size);

  /// [2, 46.8] x [-30.08, 30.08] x [-3, 1] at 0.16 m.
  static GridSpec kitti();

  const Interval& x_range() const noexcept { return ranges_[0]; }
  const Interval& y_range() const noexcept { return ranges_[1]; }
  const Interval& z_range() const noexcept { return ranges_[2]; }
  const Interval& range(int axis) const { return ranges_.at(static_cast<std::size_t>(axis)); }
  double voxel_size() const noexcept { return voxel_size_; }
  GridDims dims() const noexcept { return dims_; }
  std::size_t dim(int axis) const;

  Eigen::Vector3d min_corner() const;
  Eigen::Vector3d max_corner() const;
  Eigen::Vector3d voxel_center(const VoxelIndex& idx) const;

  /// Cell containing p; points on the max face belong to the last cell.
  std::optional<VoxelIndex> voxel_of(const Eigen::Vector3d& p) const;

  bool contains(const VoxelIndex& idx) const noexcept;
  std::size_t linear_index(const VoxelIndex& idx) const noexcept;
  VoxelIndex from_linear(std::size_t i) const noexcept;

  bool operator==(const GridSpec&) const = default;

 private:
  std::array<Interval, 3> ranges_;
  double voxel_size_;
  GridDims dims_;
};

GridDims grid_dims(const GridSpec& spec);

/// Depth range and bin count of the linear-increasing discretization.
class BinSpec {
 public:
  BinSpec(double d_min, double d_max, int num_bins);

  static constexpr int kDefaultNumBins = 80;

  double d_min() const noexcept { return d_min_; }
  double d_max() const noexcept { return d_max_; }
  int num_bins() const noexcept { return num_bins_; }

  bool operator==(const BinSpec&) const = default;

 private:
  double d_min_;
  double d_max_;
  int num_bins_;
};

/// Per-pixel metric depth indexed (u, v). 0 marks a missing measurement.
class DepthMap {
 public:
  static constexpr float kMissing = 0.0f;

  DepthMap(std::size_t width, std::size_t height);
  explicit DepthMap(Tensor values);

  std::size_t width() const noexcept { return values_.dim(0); }
  std::size_t height() const noexcept { return values_.dim(1); }
  float at(std::size_t u, std::size_t v) const { return values_(u, v); }
  void set(std::size_t u, std::size_t v, float depth);
  bool valid(std::size_t u, std::size_t v) const { return values_(u, v) != kMissing; }
  const Tensor& values() const noexcept { return values_; }

 private:
  Tensor values_;
};

enum class DownsampleMode { Nearest, MinPool };

/// Reduce a full-resolution depth map by an integer stride. Nearest picks the
/// pixel at offset stride/2 inside each block; min-pool keeps the closest
/// valid depth in the block.
DepthMap downsample_depth(const DepthMap& depth, int stride, DownsampleMode mode);

/// KITTI camera-2 calibration chain: lidar -> camera -> rectified -> image.
class CameraCalibration {
 public:
  using Matrix34 = Eigen::Matrix<double, 3, 4>;

  CameraCalibration(const Matrix34& intrinsics, const Eigen::Matrix3d& rectification,
                    const Matrix34& lidar_to_camera);

  static CameraCalibration identity();

  const Matrix34& intrinsics() const noexcept { return intrinsics_; }
  const Eigen::Matrix3d& rectification() const noexcept { return rectification_; }
  const Matrix34& lidar_to_camera() const noexcept { return lidar_to_camera_; }

  /// World (lidar) point to rectified camera frame.
  Eigen::Vector3d world_to_rect(const Eigen::Vector3d& p) const;
  Eigen::Vector3d rect_to_world(const Eigen::Vector3d& p) const;
  /// Rotation-only parts of the above, for direction vectors.
  Eigen::Vector3d world_dir_to_rect(const Eigen::Vector3d& d) const;
  Eigen::Vector3d rect_dir_to_world(const Eigen::Vector3d& d) const;

  /// Pixel coordinates of a rectified-frame point; nullopt when the point is
  /// not in front of the image plane.
  std::optional<Eigen::Vector2d> project_rect(const Eigen::Vector3d& p) const;

  /// Camera optical center expressed in the world frame.
  Eigen::Vector3d camera_center_world() const;

 private:
  Matrix34 intrinsics_;
  Eigen::Matrix3d rectification_;
  Matrix34 lidar_to_camera_;
  Eigen::Matrix3d world_to_rect_rot_;
  Eigen::Vector3d world_to_rect_trans_;
  Eigen::Matrix3d rect_to_world_rot_;
};

/// Image features (W_F, H_F, C).
struct FeaturePlane {
  explicit FeaturePlane(Tensor values);
  std::size_t width() const { return values.dim(0); }
  std::size_t height() const { return values.dim(1); }
  std::size_t channels() const { return values.dim(2); }
  Tensor values;
};

/// Frustum features (W_F, H_F, D, C).
struct FrustumGrid {
  explicit FrustumGrid(Tensor values);
  std::size_t width() const { return values.dim(0); }
  std::size_t height() const { return values.dim(1); }
  std::size_t bins() const { return values.dim(2); }
  std::size_t channels() const { return values.dim(3); }
  Tensor values;
};

/// Voxel features (X, Y, Z, C) on a grid.
struct VoxelGrid {
  VoxelGrid(Tensor values, GridSpec spec);
  std::size_t channels() const { return values.dim(3); }
  Tensor values;
  GridSpec spec;
};

void require_finite(std::span<const float> values, const char* what);
void require_finite(std::span<const double> values, const char* what);

}  // namespace monodtf
