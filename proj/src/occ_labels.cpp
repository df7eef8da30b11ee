#include "monodtf/occ_labels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "monodtf/parallel.hpp"

namespace monodtf {

OccupancyLabelGrid::OccupancyLabelGrid(GridSpec spec, OccupancyState fill)
    : spec_(std::move(spec)), states_(spec_.dims().count(), fill) {}

OccupancyLabelGrid OccupancyLabelGrid::from_tensor(const Tensor& tensor, const GridSpec& spec) {
  const auto d = spec.dims();
  if (tensor.rank() != 3 || tensor.dim(0) != d.x || tensor.dim(1) != d.y || tensor.dim(2) != d.z) {
    throw Error(ErrorCode::DimMismatch, "label tensor dims do not match grid spec");
  }
  OccupancyLabelGrid grid(spec);
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const float v = tensor[i];
    if (v == 1.0f) grid.states_[i] = OccupancyState::Occupied;
    else if (v == 0.0f) grid.states_[i] = OccupancyState::Free;
    else if (v == -1.0f) grid.states_[i] = OccupancyState::Unknown;
    else throw Error(ErrorCode::RangeError, "label value must be 1, 0 or -1");
  }
  return grid;
}

Tensor OccupancyLabelGrid::to_tensor() const {
  const auto d = spec_.dims();
  Tensor t({d.x, d.y, d.z});
  for (std::size_t i = 0; i < states_.size(); ++i) t[i] = static_cast<float>(static_cast<std::int8_t>(states_[i]));
  return t;
}

LabelCounts OccupancyLabelGrid::counts() const {
  LabelCounts c;
  for (auto s : states_) {
    switch (s) {
      case OccupancyState::Occupied: ++c.occupied; break;
      case OccupancyState::Free: ++c.free; break;
      case OccupancyState::Unknown: ++c.unknown; break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

double normalize_angle(double radians) {
  if (!std::isfinite(radians)) throw Error(ErrorCode::NonFiniteInput, "angle must be finite");
  double a = std::remainder(radians, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

OrientedBox3D::OrientedBox3D(const Eigen::Vector3d& center, double h, double w, double l, double yaw)
    : center_(center), h_(h), w_(w), l_(l), yaw_(normalize_angle(yaw)) {
  if (!center.allFinite()) throw Error(ErrorCode::NonFiniteInput, "box center must be finite");
  if (!(h > 0.0 && w > 0.0 && l > 0.0) || !std::isfinite(h) || !std::isfinite(w) || !std::isfinite(l)) {
    throw Error(ErrorCode::InvalidArgument, "box dims must be positive and finite");
  }
}

std::array<Eigen::Vector3d, 8> OrientedBox3D::corners() const {
  const double c = std::cos(yaw_), s = std::sin(yaw_);
  std::array<Eigen::Vector3d, 8> out;
  for (int k = 0; k < 8; ++k) {
    const double x = (k & 1 ? 0.5 : -0.5) * l_;
    const double y = (k & 2 ? 0.5 : -0.5) * w_;
    const double z = (k & 4 ? 0.5 : -0.5) * h_;
    out[static_cast<std::size_t>(k)] = center_ + Eigen::Vector3d(c * x - s * y, s * x + c * y, z);
  }
  return out;
}

// ---------------------------------------------------------------------------

RayTraversal traverse_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& endpoint, const GridSpec& spec) {
  if (!origin.allFinite() || !endpoint.allFinite()) throw Error(ErrorCode::NonFiniteInput, "ray must be finite");
  if (origin == endpoint) throw Error(ErrorCode::DegenerateRay, "ray origin equals endpoint");

  RayTraversal out;
  out.hit = spec.voxel_of(endpoint);

  const Eigen::Vector3d dir = endpoint - origin;
  const Eigen::Vector3d lo = spec.min_corner();
  const Eigen::Vector3d hi = spec.max_corner();
  const double vs = spec.voxel_size();

  // Clip the parametric segment t in [0, 1] to the grid box.
  double t_enter = 0.0, t_exit = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return out;
      continue;
    }
    double t0 = (lo[a] - origin[a]) / dir[a];
    double t1 = (hi[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (!(t_exit > t_enter)) return out;

  const Eigen::Vector3d start = origin + t_enter * dir;
  int idx[3], step[3];
  double t_max[3];
  for (int a = 0; a < 3; ++a) {
    const auto n = static_cast<long>(spec.dim(a));
    const double c = (start[a] - lo[a]) / vs;
    long i = static_cast<long>(std::floor(c));
    if (dir[a] < 0.0 && c == std::floor(c)) --i;
    idx[a] = static_cast<int>(std::clamp(i, 0L, n - 1));
    if (dir[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (lo[a] + (idx[a] + 1) * vs - origin[a]) / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (lo[a] + idx[a] * vs - origin[a]) / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
    }
  }

  std::vector<VoxelIndex> crossed;
  double t_cur = t_enter;
  while (true) {
    const double t_next = std::min({t_max[0], t_max[1], t_max[2], t_exit});
    if (t_next > t_cur) crossed.push_back({idx[0], idx[1], idx[2]});
    if (t_next >= t_exit) break;
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      if (t_max[a] != t_next) continue;
      idx[a] += step[a];
      t_max[a] = (lo[a] + (step[a] > 0 ? idx[a] + 1 : idx[a]) * vs - origin[a]) / dir[a];
      if (idx[a] < 0 || static_cast<std::size_t>(idx[a]) >= spec.dim(a)) inside = false;
    }
    if (!inside) break;
    t_cur = std::max(t_cur, t_next);
  }

  out.passed.reserve(crossed.size());
  for (const auto& v : crossed) {
    if (!out.hit || v != *out.hit) out.passed.push_back(v);
  }
  return out;
}

OccupancyLabelGrid point_cloud_labels(const PointCloud& points, const Eigen::Vector3d& sensor_origin,
                                      const GridSpec& spec, unsigned threads) {
  const std::size_t cells = spec.dims().count();
  std::vector<std::uint8_t> occupied(cells, 0);
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::NonFiniteInput, "point cloud contains non-finite coordinates");
    if (auto v = spec.voxel_of(p)) occupied[spec.linear_index(*v)] = 1;
  }

  // Each worker marks crossings in its own buffer; OR-merging keeps the
  // result independent of the split.
  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(points.size(), 1));
  std::vector<std::vector<std::uint8_t>> crossed(workers);
  const std::size_t chunk = (points.size() + workers - 1) / std::max<std::size_t>(workers, 1);
  parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      auto& mark = crossed[w];
      mark.assign(cells, 0);
      const std::size_t end = std::min(points.size(), (w + 1) * chunk);
      for (std::size_t i = w * chunk; i < end; ++i) {
        if (points[i] == sensor_origin) continue;
        for (const auto& v : traverse_ray(sensor_origin, points[i], spec).passed) mark[spec.linear_index(v)] = 1;
      }
    }
  });

  OccupancyLabelGrid grid(spec);
  auto states = grid.states();
  for (std::size_t i = 0; i < cells; ++i) {
    if (occupied[i]) {
      states[i] = OccupancyState::Occupied;
      continue;
    }
    for (const auto& mark : crossed) {
      if (!mark.empty() && mark[i]) {
        states[i] = OccupancyState::Free;
        break;
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------

OrientedBox3D shrink_box(const OrientedBox3D& box, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw Error(ErrorCode::BadScale, "shrink scale must lie in (0, 1]");
  return OrientedBox3D(box.center(), box.h() * scale, box.w() * scale, box.l() * scale, box.yaw());
}

bool point_in_box(const Eigen::Vector3d& p, const OrientedBox3D& box) {
  const Eigen::Vector3d d = p - box.center();
  const double c = std::cos(box.yaw()), s = std::sin(box.yaw());
  const double x = c * d.x() + s * d.y();
  const double y = -s * d.x() + c * d.y();
  return std::abs(x) <= 0.5 * box.l() && std::abs(y) <= 0.5 * box.w() && std::abs(d.z()) <= 0.5 * box.h();
}

OccupancyLabelGrid box_labels(std::span<const OrientedBox3D> boxes, double scale, const GridSpec& spec) {
  if (!(scale > 0.0 && scale <= 1.0)) throw Error(ErrorCode::BadScale, "shrink scale must lie in (0, 1]");
  OccupancyLabelGrid grid(spec);
  const Eigen::Vector3d lo = spec.min_corner();
  const double vs = spec.voxel_size();
  for (const auto& original : boxes) {
    const auto box = shrink_box(original, scale);
    const double c = std::abs(std::cos(box.yaw())), s = std::abs(std::sin(box.yaw()));
    const Eigen::Vector3d half(0.5 * (c * box.l() + s * box.w()), 0.5 * (s * box.l() + c * box.w()), 0.5 * box.h());
    int first[3], last[3];
    for (int a = 0; a < 3; ++a) {
      const long n = static_cast<long>(spec.dim(a));
      // One cell of slack on each side; the exact test happens per center.
      const long i0 = static_cast<long>(std::floor((box.center()[a] - half[a] - lo[a]) / vs)) - 1;
      const long i1 = static_cast<long>(std::floor((box.center()[a] + half[a] - lo[a]) / vs)) + 1;
      first[a] = static_cast<int>(std::clamp(i0, 0L, n - 1));
      last[a] = static_cast<int>(std::clamp(i1, -1L, n - 1));
      if (i1 < 0 || i0 >= n) last[a] = first[a] - 1;
    }
    for (int i = first[0]; i <= last[0]; ++i) {
      for (int j = first[1]; j <= last[1]; ++j) {
        for (int k = first[2]; k <= last[2]; ++k) {
          const VoxelIndex v{i, j, k};
          if (point_in_box(spec.voxel_center(v), box)) grid.set(v, OccupancyState::Occupied);
        }
      }
    }
  }
  return grid;
}

OccupancyLabelGrid union_labels(const OccupancyLabelGrid& a, const OccupancyLabelGrid& b) {
  if (!(a.spec() == b.spec())) throw Error(ErrorCode::SpecMismatch, "label grids use different grid specs");
  OccupancyLabelGrid out(a.spec());
  auto dst = out.states();
  const auto sa = a.states();
  const auto sb = b.states();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(sa[i], sb[i]);
  return out;
}

}  // namespace monodtf
