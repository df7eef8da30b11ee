#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "monodtf/core.hpp"
#include "monodtf/depth_repr.hpp"
#include "monodtf/frustum_voxel.hpp"

namespace monodtf {

/// Numeric and geometric settings shared by the CLI commands. Serialized as
/// flat `key = value` lines; `#` starts a comment.
struct PipelineConfig {
  BinSpec bins{2.0, 46.8, BinSpec::kDefaultNumBins};
  GridSpec grid = GridSpec::kitti();
  std::optional<int> extension_radius;  // no default; required for targets and losses
  FocalParams focal;
  double shrink_scale = 0.8;
  int feature_stride = 4;
  DownsampleMode downsample = DownsampleMode::Nearest;
  double threshold = 0.5;
  SamplingMode sampling = SamplingMode::Trilinear;
  unsigned threads = 0;  // 0 = hardware concurrency
  std::vector<std::string> categories{"Car"};

  int require_extension_radius() const;
};

using ConfigOverrides = std::map<std::string, std::string, std::less<>>;

/// Parse `key = value` lines into a map. Later keys replace earlier ones.
ConfigOverrides parse_config_text(std::string_view text);

/// Parse a single `key=value` override.
std::pair<std::string, std::string> parse_config_assignment(std::string_view assignment);

/// Build a config from defaults plus overrides; validates every component.
PipelineConfig build_config(const ConfigOverrides& overrides);

std::string format_config(const PipelineConfig& config);

}  // namespace monodtf
