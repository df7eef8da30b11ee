#pragma once

// Reference implementations used only by the tests. Each one is written
// independently of the library code it checks (different formulation,
// brute force, or higher precision).

#include <array>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "monodtf/core.hpp"
#include "monodtf/depth_repr.hpp"
#include "monodtf/occ_labels.hpp"

namespace oracle {

using monodtf::VoxelIndex;

// --- depth binning ----------------------------------------------------------

/// Edges built by accumulating widths delta * (i + 1).
std::vector<double> cumulative_edges(double d_min, double d_max, int num_bins);

/// Last bin whose lower edge is <= z, found by linear scan and clamped to
/// [0, D - 1].
int edge_scan_index(double z, const std::vector<double>& edges);

/// Continuous bin coordinate by bisection on the edge polynomial.
double bisect_bin_coord(double z, double d_min, double d_max, int num_bins);

// --- depth representations ----------------------------------------------------

std::vector<long double> softmax_long(const std::vector<double>& logits);

/// One focal term evaluated straight from the closed form.
double focal_term(double p, double t, double alpha, double gamma);

/// Full masked loss by direct summation.
double masked_focal_loss(const monodtf::DepthVolume& pred, const monodtf::DepthVolume& target,
                         const monodtf::DepthVolume& mask, double alpha, double gamma);

// --- lifting and sampling -----------------------------------------------------

monodtf::Tensor lift_loop(const monodtf::DepthVolume& weights, const monodtf::Tensor& features);

struct SampleGeometry {
  bool inside = false;
  double u = 0, v = 0, d = 0;  // frustum sample coordinates
};

/// Projects a world point with a composed 3x4 world -> image matrix.
SampleGeometry project_world(const Eigen::Vector3d& p, const monodtf::CameraCalibration& calib,
                             const monodtf::BinSpec& bins, int stride, std::size_t fw, std::size_t fh);

/// Voxel grid (X, Y, Z, C) sampled one voxel at a time.
monodtf::Tensor sample_brute_force(const monodtf::Tensor& frustum, const monodtf::CameraCalibration& calib,
                                   const monodtf::GridSpec& grid, const monodtf::BinSpec& bins, int stride,
                                   bool nearest);

// --- ray traversal and labels -------------------------------------------------

/// Length of the segment o->e inside the axis-aligned box [lo, hi].
double segment_box_length(const Eigen::Vector3d& o, const Eigen::Vector3d& e, const Eigen::Vector3d& lo,
                          const Eigen::Vector3d& hi);

/// Cells crossed by the segment, found by sorting every grid-plane crossing
/// and locating each sub-interval midpoint. Maps cell -> crossed length.
std::map<VoxelIndex, double> crossed_cells(const Eigen::Vector3d& o, const Eigen::Vector3d& e,
                                           const monodtf::GridSpec& grid);

/// Cells visited by points spaced `step` apart along the segment.
std::set<VoxelIndex> dense_cells(const Eigen::Vector3d& o, const Eigen::Vector3d& e, const monodtf::GridSpec& grid,
                                 double step);

/// Cell of a point by floor division, nullopt outside the grid.
std::optional<VoxelIndex> bin_point(const Eigen::Vector3d& p, const monodtf::GridSpec& grid);

std::vector<std::int8_t> point_labels_brute_force(const monodtf::PointCloud& points, const Eigen::Vector3d& origin,
                                                   const monodtf::GridSpec& grid);

/// Containment via the six face planes spanned by box corners.
bool in_box_halfspace(const Eigen::Vector3d& p, const Eigen::Vector3d& center, double h, double w, double l,
                      double yaw);

std::vector<std::int8_t> box_labels_exhaustive(const std::vector<monodtf::OrientedBox3D>& boxes, double scale,
                                               const monodtf::GridSpec& grid);

// --- fixtures -----------------------------------------------------------------

/// 20 x 20 x 20 grid of unit cells in front of a synthetic camera that looks
/// along +x, with a 64 x 64 image and stride 8 (8 x 8 feature plane).
struct SyntheticScene {
  monodtf::GridSpec grid;
  monodtf::CameraCalibration calib;
  monodtf::BinSpec bins;
  int stride;
  std::size_t image_size;
};

SyntheticScene synthetic_scene();

/// Small 20^3 grid spanning [0, 20]^3 at unit voxels, for ray/label tests.
monodtf::GridSpec cube_grid();

monodtf::Tensor random_tensor(std::mt19937_64& rng, const monodtf::Tensor::Shape& shape, float lo, float hi);

}  // namespace oracle
