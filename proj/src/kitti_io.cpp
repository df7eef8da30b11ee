#include "monodtf/kitti_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

namespace monodtf {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::size_t stop = end == std::string_view::npos ? text.size() : end;
    std::string_view line = text.substr(start, stop - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

double parse_double(std::string_view token) {
  double v = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedNumber, "cannot parse '" + std::string(token) + "' as a real number");
  }
  return v;
}

int parse_int(std::string_view token) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::MalformedNumber, "cannot parse '" + std::string(token) + "' as an integer");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

// ---------------------------------------------------------------------------

CameraCalibration parse_calib(std::string_view text) {
  std::map<std::string, std::vector<double>, std::less<>> entries;
  for (auto line : split_lines(text)) {
    if (blank(line)) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::MalformedNumber, "calib line lacks a 'KEY:' prefix: " + std::string(line));
    }
    const auto keys = split_ws(line.substr(0, colon));
    if (keys.size() != 1) throw Error(ErrorCode::MalformedNumber, "calib key is malformed: " + std::string(line));
    std::vector<double> values;
    for (auto tok : split_ws(line.substr(colon + 1))) values.push_back(parse_double(tok));
    if (!entries.emplace(std::string(keys[0]), std::move(values)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate calib key " + std::string(keys[0]));
    }
  }
  auto take = [&](const char* key, std::size_t arity) -> const std::vector<double>& {
    const auto it = entries.find(key);
    if (it == entries.end()) throw Error(ErrorCode::MissingKey, std::string("calib lacks ") + key);
    if (it->second.size() != arity) {
      throw Error(ErrorCode::WrongArity, std::string(key) + " has " + std::to_string(it->second.size()) +
                                             " values, expected " + std::to_string(arity));
    }
    return it->second;
  };
  const auto& p2 = take("P2", 12);
  const auto& r0 = take("R0_rect", 9);
  const auto& tr = take("Tr_velo_to_cam", 12);
  CameraCalibration::Matrix34 p, t;
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      p(i, j) = p2[static_cast<std::size_t>(4 * i + j)];
      t(i, j) = tr[static_cast<std::size_t>(4 * i + j)];
    }
    for (int j = 0; j < 3; ++j) r(i, j) = r0[static_cast<std::size_t>(3 * i + j)];
  }
  return CameraCalibration(p, r, t);
}

std::string format_calib(const CameraCalibration& calib) {
  std::ostringstream out;
  auto row_major = [&](const char* key, const auto& m) {
    out << key << ':';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << format_real(m(i, j));
    }
    out << '\n';
  };
  row_major("P2", calib.intrinsics());
  row_major("R0_rect", calib.rectification());
  row_major("Tr_velo_to_cam", calib.lidar_to_camera());
  return out.str();
}

// ---------------------------------------------------------------------------

std::vector<KittiLabelRecord> parse_labels(std::string_view text) {
  std::vector<KittiLabelRecord> records;
  for (auto line : split_lines(text)) {
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 15) {
      throw Error(ErrorCode::WrongFieldCount,
                  "label line has " + std::to_string(f.size()) + " fields, expected 15: " + std::string(line));
    }
    KittiLabelRecord r;
    r.category = std::string(f[0]);
    r.truncation = parse_double(f[1]);
    r.occlusion = parse_int(f[2]);
    r.alpha = parse_double(f[3]);
    for (std::size_t i = 0; i < 4; ++i) r.bbox[i] = parse_double(f[4 + i]);
    r.h = parse_double(f[8]);
    r.w = parse_double(f[9]);
    r.l = parse_double(f[10]);
    r.location = {parse_double(f[11]), parse_double(f[12]), parse_double(f[13])};
    r.rotation_y = parse_double(f[14]);
    if (!r.dont_care()) {
      if (!(r.h > 0.0 && r.w > 0.0 && r.l > 0.0)) {
        throw Error(ErrorCode::RangeError, "non-DontCare label has non-positive dims: " + std::string(line));
      }
      if (std::abs(r.rotation_y) > std::numbers::pi + 1e-9) {
        throw Error(ErrorCode::RangeError, "rotation_y outside [-pi, pi]: " + std::string(line));
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string format_label(const KittiLabelRecord& r) {
  std::ostringstream out;
  out << r.category << ' ' << format_real(r.truncation) << ' ' << r.occlusion << ' ' << format_real(r.alpha);
  for (double b : r.bbox) out << ' ' << format_real(b);
  out << ' ' << format_real(r.h) << ' ' << format_real(r.w) << ' ' << format_real(r.l);
  for (int i = 0; i < 3; ++i) out << ' ' << format_real(r.location[i]);
  out << ' ' << format_real(r.rotation_y) << '\n';
  return out.str();
}

OrientedBox3D label_to_world_box(const KittiLabelRecord& rec, const CameraCalibration& calib) {
  if (rec.dont_care()) throw Error(ErrorCode::InvalidArgument, "DontCare records carry no box");
  // Camera y points down, so the geometric center sits h/2 above the bottom face.
  const Eigen::Vector3d center_rect = rec.location - Eigen::Vector3d(0.0, 0.5 * rec.h, 0.0);
  const Eigen::Vector3d heading_rect(std::cos(rec.rotation_y), 0.0, -std::sin(rec.rotation_y));
  const Eigen::Vector3d heading = calib.rect_dir_to_world(heading_rect);
  return OrientedBox3D(calib.rect_to_world(center_rect), rec.h, rec.w, rec.l, std::atan2(heading.y(), heading.x()));
}

KittiLabelRecord world_box_to_label(const OrientedBox3D& box, const CameraCalibration& calib,
                                    const KittiLabelRecord& base) {
  KittiLabelRecord rec = base;
  rec.h = box.h();
  rec.w = box.w();
  rec.l = box.l();
  rec.location = calib.world_to_rect(box.center()) + Eigen::Vector3d(0.0, 0.5 * box.h(), 0.0);
  // Solve for the rotation_y whose world heading has azimuth `yaw`: the
  // heading must be orthogonal to the in-plane normal n = (-sin, cos, 0).
  const double cy = std::cos(box.yaw()), sy = std::sin(box.yaw());
  const Eigen::Vector3d n(-sy, cy, 0.0);
  Eigen::Matrix3d to_world;
  for (int c = 0; c < 3; ++c) to_world.col(c) = calib.rect_dir_to_world(Eigen::Vector3d::Unit(c));
  const Eigen::Vector3d coeff = to_world.transpose() * n;
  double ry = std::atan2(coeff.x(), coeff.z());
  const Eigen::Vector3d heading = to_world * Eigen::Vector3d(std::cos(ry), 0.0, -std::sin(ry));
  if (heading.x() * cy + heading.y() * sy < 0.0) ry += std::numbers::pi;
  rec.rotation_y = normalize_angle(ry);
  return rec;
}

// ---------------------------------------------------------------------------

PointCloud read_velodyne(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::TruncatedRecord,
                "velodyne scan of " + std::to_string(bytes.size()) + " bytes is not a multiple of 16");
  }
  PointCloud points(bytes.size() / 16);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint8_t* rec = bytes.data() + 16 * i;
    for (int a = 0; a < 3; ++a) points[i][a] = std::bit_cast<float>(load_u32(rec + 4 * a));
    if (!points[i].allFinite()) throw Error(ErrorCode::NonFiniteInput, "velodyne point is not finite");
  }
  return points;
}

std::vector<std::uint8_t> write_velodyne(const PointCloud& points) {
  std::vector<std::uint8_t> out;
  out.reserve(points.size() * 16);
  for (const auto& p : points) {
    for (int a = 0; a < 3; ++a) store_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p[a])));
    store_u32(out, std::bit_cast<std::uint32_t>(0.0f));
  }
  return out;
}

// ---------------------------------------------------------------------------

DepthMap read_depth_png(std::span<const std::uint8_t> bytes) {
  const RawImage img = decode_png(bytes);
  if (img.channels != 1) {
    throw Error(ErrorCode::WrongChannelCount, "depth PNG has " + std::to_string(img.channels) + " channels");
  }
  if (img.bit_depth != 16) {
    throw Error(ErrorCode::WrongBitDepth, "depth PNG is " + std::to_string(img.bit_depth) + "-bit, expected 16");
  }
  DepthMap depth(img.width, img.height);
  for (std::size_t v = 0; v < img.height; ++v) {
    for (std::size_t u = 0; u < img.width; ++u) {
      const std::uint16_t raw = img.samples[v * img.width + u];
      depth.set(u, v, raw == 0 ? DepthMap::kMissing : static_cast<float>(raw / kDepthPngScale));
    }
  }
  return depth;
}

std::vector<std::uint8_t> write_depth_png(const DepthMap& depth) {
  RawImage img{depth.width(), depth.height(), 1, 16, {}};
  img.samples.resize(depth.width() * depth.height());
  for (std::size_t v = 0; v < depth.height(); ++v) {
    for (std::size_t u = 0; u < depth.width(); ++u) {
      const double raw = std::round(static_cast<double>(depth.at(u, v)) * kDepthPngScale);
      if (raw > 65535.0) throw Error(ErrorCode::RangeError, "depth exceeds the 16-bit PNG range");
      img.samples[v * depth.width() + u] = static_cast<std::uint16_t>(raw);
    }
  }
  return encode_png(img);
}

}  // namespace monodtf
