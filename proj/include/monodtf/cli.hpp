#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "monodtf/core.hpp"

namespace monodtf {

enum class TriStateMode { Auto, On, Off };

/// Grayscale slice of a rank-3 volume (rank-4 volumes are reduced by a max
/// over the last axis). axis 0/1/2 = x/y/z; image columns run along the first
/// remaining axis and rows along the second. Tri-state grids map
/// {-1, 0, 1} -> {0, 128, 255}; anything else is min-max scaled to [0, 255].
struct GraySlice {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

GraySlice render_slice(const Tensor& volume, int axis, std::size_t index, TriStateMode tristate = TriStateMode::Auto);
std::vector<std::uint8_t> encode_pgm(const GraySlice& slice);

/// Load a depth map from a 16-bit PNG or, for any other extension, a rank-2
/// TensorBlob.
DepthMap load_depth(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace monodtf
