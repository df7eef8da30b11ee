#include "monodtf/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace monodtf {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "d_min",        "d_max",       "num_bins",    "x_min",          "x_max",     "y_min",
    "y_max",        "z_min",       "z_max",       "voxel_size",     "extension_radius",
    "focal_alpha",  "focal_gamma", "shrink_scale", "feature_stride", "downsample",
    "threshold",    "sampling",    "threads",     "categories",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedNumber, "config key " + key + " expects a real number, got '" + value + "'");
  }
  return v;
}

long to_integer(const std::string& key, const std::string& value) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::MalformedNumber, "config key " + key + " expects an integer, got '" + value + "'");
  }
  return v;
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int PipelineConfig::require_extension_radius() const {
  if (!extension_radius) throw Error(ErrorCode::MissingKey, "config must set extension_radius");
  return *extension_radius;
}

std::pair<std::string, std::string> parse_config_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "config entry '" + std::string(assignment) + "' lacks '='");
  }
  std::string key(trim(assignment.substr(0, eq)));
  std::string value(trim(assignment.substr(eq + 1)));
  if (!kKnownKeys.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, "config key " + key + " has an empty value");
  return {std::move(key), std::move(value)};
}

ConfigOverrides parse_config_text(std::string_view text) {
  ConfigOverrides out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    auto [key, value] = parse_config_assignment(line);
    out[key] = value;
  }
  return out;
}

PipelineConfig build_config(const ConfigOverrides& o) {
  PipelineConfig c;
  auto real = [&](const char* key, double fallback) {
    const auto it = o.find(key);
    return it == o.end() ? fallback : to_real(key, it->second);
  };
  auto integer = [&](const char* key, long fallback) {
    const auto it = o.find(key);
    return it == o.end() ? fallback : to_integer(key, it->second);
  };

  c.bins = BinSpec(real("d_min", c.bins.d_min()), real("d_max", c.bins.d_max()),
                   static_cast<int>(integer("num_bins", c.bins.num_bins())));
  const GridSpec& g = c.grid;
  c.grid = GridSpec({real("x_min", g.x_range().min), real("x_max", g.x_range().max)},
                    {real("y_min", g.y_range().min), real("y_max", g.y_range().max)},
                    {real("z_min", g.z_range().min), real("z_max", g.z_range().max)},
                    real("voxel_size", g.voxel_size()));
  if (o.contains("extension_radius")) {
    const long l = integer("extension_radius", 0);
    if (l < 0) throw Error(ErrorCode::InvalidArgument, "extension_radius must be >= 0");
    c.extension_radius = static_cast<int>(l);
  }
  c.focal.alpha = real("focal_alpha", c.focal.alpha);
  c.focal.gamma = real("focal_gamma", c.focal.gamma);
  if (!(c.focal.alpha > 0.0 && c.focal.alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "focal_alpha must lie in (0, 1)");
  if (!(c.focal.gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "focal_gamma must be >= 0");
  c.shrink_scale = real("shrink_scale", c.shrink_scale);
  if (!(c.shrink_scale > 0.0 && c.shrink_scale <= 1.0)) throw Error(ErrorCode::BadScale, "shrink_scale must lie in (0, 1]");
  const long stride = integer("feature_stride", c.feature_stride);
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "feature_stride must be >= 1");
  c.feature_stride = static_cast<int>(stride);
  c.threshold = real("threshold", c.threshold);
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  const long threads = integer("threads", 0);
  if (threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 0");
  c.threads = static_cast<unsigned>(threads);

  if (const auto it = o.find("downsample"); it != o.end()) {
    if (it->second == "nearest") c.downsample = DownsampleMode::Nearest;
    else if (it->second == "minpool") c.downsample = DownsampleMode::MinPool;
    else throw Error(ErrorCode::InvalidArgument, "downsample must be 'nearest' or 'minpool'");
  }
  if (const auto it = o.find("sampling"); it != o.end()) {
    if (it->second == "trilinear") c.sampling = SamplingMode::Trilinear;
    else if (it->second == "nearest") c.sampling = SamplingMode::Nearest;
    else throw Error(ErrorCode::InvalidArgument, "sampling must be 'trilinear' or 'nearest'");
  }
  if (const auto it = o.find("categories"); it != o.end()) {
    c.categories.clear();
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto t = trim(item);
      if (!t.empty()) c.categories.emplace_back(t);
    }
  }
  return c;
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "d_min = " << real_text(c.bins.d_min()) << '\n'
      << "d_max = " << real_text(c.bins.d_max()) << '\n'
      << "num_bins = " << c.bins.num_bins() << '\n'
      << "x_min = " << real_text(c.grid.x_range().min) << '\n'
      << "x_max = " << real_text(c.grid.x_range().max) << '\n'
      << "y_min = " << real_text(c.grid.y_range().min) << '\n'
      << "y_max = " << real_text(c.grid.y_range().max) << '\n'
      << "z_min = " << real_text(c.grid.z_range().min) << '\n'
      << "z_max = " << real_text(c.grid.z_range().max) << '\n'
      << "voxel_size = " << real_text(c.grid.voxel_size()) << '\n';
  if (c.extension_radius) out << "extension_radius = " << *c.extension_radius << '\n';
  out << "focal_alpha = " << real_text(c.focal.alpha) << '\n'
      << "focal_gamma = " << real_text(c.focal.gamma) << '\n'
      << "shrink_scale = " << real_text(c.shrink_scale) << '\n'
      << "feature_stride = " << c.feature_stride << '\n'
      << "downsample = " << (c.downsample == DownsampleMode::Nearest ? "nearest" : "minpool") << '\n'
      << "threshold = " << real_text(c.threshold) << '\n'
      << "sampling = " << (c.sampling == SamplingMode::Trilinear ? "trilinear" : "nearest") << '\n'
      << "threads = " << c.threads << '\n'
      << "categories = ";
  for (std::size_t i = 0; i < c.categories.size(); ++i) out << (i ? "," : "") << c.categories[i];
  out << '\n';
  return out.str();
}

}  // namespace monodtf
