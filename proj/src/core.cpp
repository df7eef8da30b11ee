#include "monodtf/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace monodtf {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonCommensurateRange: return "NonCommensurateRange";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::DimOverflow: return "DimOverflow";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::SingularCalibration: return "SingularCalibration";
    case ErrorCode::DegenerateRay: return "DegenerateRay";
    case ErrorCode::BadScale: return "BadScale";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::WrongFieldCount: return "WrongFieldCount";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::WrongBitDepth: return "WrongBitDepth";
    case ErrorCode::WrongChannelCount: return "WrongChannelCount";
    case ErrorCode::SliceOutOfRange: return "SliceOutOfRange";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

// ---------------------------------------------------------------------------
// GridSpec

namespace {

std::size_t commensurate_cells(const Interval& r, double voxel, const char* axis) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.max > r.min)) {
    throw Error(ErrorCode::InvalidArgument, std::string(axis) + " range must satisfy min < max");
  }
  const double len = r.length();
  const double cells = std::round(len / voxel);
  if (cells < 1.0 || std::abs(cells * voxel - len) > 1e-9 * len) {
    std::ostringstream msg;
    msg << axis << " range length " << len << " is not a multiple of voxel size " << voxel;
    throw Error(ErrorCode::NonCommensurateRange, msg.str());
  }
  return static_cast<std::size_t>(cells);
}

}  // namespace

GridSpec::GridSpec(Interval x, Interval y, Interval z, double voxel_size)
    : ranges_{x, y, z}, voxel_size_(voxel_size) {
  if (!std::isfinite(voxel_size) || voxel_size <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "voxel size must be positive");
  }
  dims_.x = commensurate_cells(x, voxel_size, "x");
  dims_.y = commensurate_cells(y, voxel_size, "y");
  dims_.z = commensurate_cells(z, voxel_size, "z");
}

GridSpec GridSpec::kitti() { return GridSpec({2.0, 46.8}, {-30.08, 30.08}, {-3.0, 1.0}, 0.16); }

std::size_t GridSpec::dim(int axis) const {
  switch (axis) {
    case 0: return dims_.x;
    case 1: return dims_.y;
    case 2: return dims_.z;
    default: throw Error(ErrorCode::InvalidArgument, "axis must be 0, 1 or 2");
  }
}

Eigen::Vector3d GridSpec::min_corner() const { return {ranges_[0].min, ranges_[1].min, ranges_[2].min}; }

Eigen::Vector3d GridSpec::max_corner() const { return {ranges_[0].max, ranges_[1].max, ranges_[2].max}; }

Eigen::Vector3d GridSpec::voxel_center(const VoxelIndex& idx) const {
  return {ranges_[0].min + (idx.x + 0.5) * voxel_size_, ranges_[1].min + (idx.y + 0.5) * voxel_size_,
          ranges_[2].min + (idx.z + 0.5) * voxel_size_};
}

std::optional<VoxelIndex> GridSpec::voxel_of(const Eigen::Vector3d& p) const {
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    const auto& r = ranges_[static_cast<std::size_t>(a)];
    if (!(p[a] >= r.min && p[a] <= r.max)) return std::nullopt;
    const auto n = static_cast<long>(dim(a));
    long i = static_cast<long>(std::floor((p[a] - r.min) / voxel_size_));
    idx[a] = static_cast<int>(std::clamp(i, 0L, n - 1));
  }
  return VoxelIndex{idx[0], idx[1], idx[2]};
}

bool GridSpec::contains(const VoxelIndex& idx) const noexcept {
  return idx.x >= 0 && idx.y >= 0 && idx.z >= 0 && static_cast<std::size_t>(idx.x) < dims_.x &&
         static_cast<std::size_t>(idx.y) < dims_.y && static_cast<std::size_t>(idx.z) < dims_.z;
}

std::size_t GridSpec::linear_index(const VoxelIndex& idx) const noexcept {
  return (static_cast<std::size_t>(idx.x) * dims_.y + static_cast<std::size_t>(idx.y)) * dims_.z +
         static_cast<std::size_t>(idx.z);
}

VoxelIndex GridSpec::from_linear(std::size_t i) const noexcept {
  const auto z = static_cast<int>(i % dims_.z);
  i /= dims_.z;
  const auto y = static_cast<int>(i % dims_.y);
  const auto x = static_cast<int>(i / dims_.y);
  return {x, y, z};
}

GridDims grid_dims(const GridSpec& spec) { return spec.dims(); }

// ---------------------------------------------------------------------------
// BinSpec

BinSpec::BinSpec(double d_min, double d_max, int num_bins) : d_min_(d_min), d_max_(d_max), num_bins_(num_bins) {
  if (!std::isfinite(d_min) || !std::isfinite(d_max) || d_min < 0.0 || !(d_max > d_min)) {
    throw Error(ErrorCode::InvalidArgument, "bin spec requires 0 <= d_min < d_max");
  }
  if (num_bins < 1) throw Error(ErrorCode::InvalidArgument, "bin spec requires at least one bin");
}

// ---------------------------------------------------------------------------
// DepthMap

DepthMap::DepthMap(std::size_t width, std::size_t height) : values_({width, height}, kMissing) {}

DepthMap::DepthMap(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 2) throw Error(ErrorCode::DimMismatch, "depth map must be rank 2 (W, H)");
  for (float d : values_.data()) {
    if (!std::isfinite(d)) throw Error(ErrorCode::NonFiniteInput, "depth map contains non-finite values");
    if (d < 0.0f) throw Error(ErrorCode::RangeError, "depth map contains negative depth");
  }
}

void DepthMap::set(std::size_t u, std::size_t v, float depth) {
  if (!std::isfinite(depth)) throw Error(ErrorCode::NonFiniteInput, "non-finite depth");
  if (depth < 0.0f) throw Error(ErrorCode::RangeError, "negative depth");
  values_(u, v) = depth;
}

DepthMap downsample_depth(const DepthMap& depth, int stride, DownsampleMode mode) {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  const auto s = static_cast<std::size_t>(stride);
  if (depth.width() % s != 0 || depth.height() % s != 0) {
    throw Error(ErrorCode::DimMismatch, "depth map size is not a multiple of the feature stride");
  }
  DepthMap out(depth.width() / s, depth.height() / s);
  for (std::size_t u = 0; u < out.width(); ++u) {
    for (std::size_t v = 0; v < out.height(); ++v) {
      if (mode == DownsampleMode::Nearest) {
        out.set(u, v, depth.at(u * s + s / 2, v * s + s / 2));
        continue;
      }
      float best = std::numeric_limits<float>::infinity();
      for (std::size_t du = 0; du < s; ++du) {
        for (std::size_t dv = 0; dv < s; ++dv) {
          const float d = depth.at(u * s + du, v * s + dv);
          if (d != DepthMap::kMissing) best = std::min(best, d);
        }
      }
      out.set(u, v, std::isfinite(best) ? best : DepthMap::kMissing);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CameraCalibration

CameraCalibration::CameraCalibration(const Matrix34& intrinsics, const Eigen::Matrix3d& rectification,
                                     const Matrix34& lidar_to_camera)
    : intrinsics_(intrinsics), rectification_(rectification), lidar_to_camera_(lidar_to_camera) {
  if (!intrinsics.allFinite() || !rectification.allFinite() || !lidar_to_camera.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "calibration contains non-finite values");
  }
  const Eigen::Matrix3d velo_rot = lidar_to_camera.leftCols<3>();
  world_to_rect_rot_ = rectification * velo_rot;
  world_to_rect_trans_ = rectification * lidar_to_camera.col(3);
  const double scale = world_to_rect_rot_.cwiseAbs().maxCoeff();
  if (!(std::abs(world_to_rect_rot_.determinant()) > 1e-12 * scale * scale * scale)) {
    throw Error(ErrorCode::SingularCalibration, "rectification and lidar_to_camera must be invertible");
  }
  rect_to_world_rot_ = world_to_rect_rot_.inverse();
  const Eigen::Matrix3d k = intrinsics.leftCols<3>();
  const double kscale = k.cwiseAbs().maxCoeff();
  if (!(kscale > 0.0) || !(std::abs(k.determinant()) > 1e-12 * kscale * kscale * kscale)) {
    throw Error(ErrorCode::SingularCalibration, "intrinsic projection is singular");
  }
}

CameraCalibration CameraCalibration::identity() {
  Matrix34 p = Matrix34::Zero();
  p.leftCols<3>().setIdentity();
  return CameraCalibration(p, Eigen::Matrix3d::Identity(), p);
}

Eigen::Vector3d CameraCalibration::world_to_rect(const Eigen::Vector3d& p) const {
  return world_to_rect_rot_ * p + world_to_rect_trans_;
}

Eigen::Vector3d CameraCalibration::rect_to_world(const Eigen::Vector3d& p) const {
  return rect_to_world_rot_ * (p - world_to_rect_trans_);
}

Eigen::Vector3d CameraCalibration::world_dir_to_rect(const Eigen::Vector3d& d) const { return world_to_rect_rot_ * d; }

Eigen::Vector3d CameraCalibration::rect_dir_to_world(const Eigen::Vector3d& d) const { return rect_to_world_rot_ * d; }

std::optional<Eigen::Vector2d> CameraCalibration::project_rect(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d h = intrinsics_.leftCols<3>() * p + intrinsics_.col(3);
  if (!(h.z() > 0.0)) return std::nullopt;
  return Eigen::Vector2d(h.x() / h.z(), h.y() / h.z());
}

Eigen::Vector3d CameraCalibration::camera_center_world() const {
  // Null space of P2: the left 3x3 block is invertible (checked on construction).
  const Eigen::Vector3d center_rect = -intrinsics_.leftCols<3>().partialPivLu().solve(intrinsics_.col(3));
  return rect_to_world(center_rect);
}

// ---------------------------------------------------------------------------
// Volumes

void require_finite(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains non-finite values");
  }
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains non-finite values");
  }
}

FeaturePlane::FeaturePlane(Tensor v) : values(std::move(v)) {
  if (values.rank() != 3) throw Error(ErrorCode::DimMismatch, "feature plane must be rank 3 (W, H, C)");
  require_finite(values.data(), "feature plane");
}

FrustumGrid::FrustumGrid(Tensor v) : values(std::move(v)) {
  if (values.rank() != 4) throw Error(ErrorCode::DimMismatch, "frustum grid must be rank 4 (W, H, D, C)");
  require_finite(values.data(), "frustum grid");
}

VoxelGrid::VoxelGrid(Tensor v, GridSpec s) : values(std::move(v)), spec(std::move(s)) {
  const auto d = spec.dims();
  if (values.rank() != 4 || values.dim(0) != d.x || values.dim(1) != d.y || values.dim(2) != d.z) {
    throw Error(ErrorCode::DimMismatch, "voxel grid dims do not match grid spec");
  }
}

}  // namespace monodtf
