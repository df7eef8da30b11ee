#include "monodtf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "monodtf/config.hpp"
#include "monodtf/depth_binning.hpp"
#include "monodtf/kitti_io.hpp"
#include "monodtf/pipeline.hpp"
#include "monodtf/tensor_blob.hpp"

namespace monodtf {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Slice rendering

GraySlice render_slice(const Tensor& volume, int axis, std::size_t index, TriStateMode tristate) {
  if (volume.rank() != 3 && volume.rank() != 4) {
    throw Error(ErrorCode::DimMismatch, "viz expects a rank-3 or rank-4 volume");
  }
  if (axis < 0 || axis > 2) throw Error(ErrorCode::InvalidArgument, "axis must be x, y or z");
  const std::size_t nx = volume.dim(0), ny = volume.dim(1), nz = volume.dim(2);
  const std::size_t nc = volume.rank() == 4 ? volume.dim(3) : 1;
  if (nc == 0) throw Error(ErrorCode::DimMismatch, "volume has no channels");
  const std::size_t extent[3] = {nx, ny, nz};
  if (index >= extent[axis]) {
    throw Error(ErrorCode::SliceOutOfRange, "slice " + std::to_string(index) + " outside axis of length " +
                                                std::to_string(extent[axis]));
  }
  const int col_axis = axis == 0 ? 1 : 0;
  const int row_axis = axis == 2 ? 1 : 2;
  GraySlice out{extent[col_axis], extent[row_axis], {}};

  std::vector<float> values(out.width * out.height);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      std::size_t idx[3];
      idx[axis] = index;
      idx[col_axis] = c;
      idx[row_axis] = r;
      const std::size_t base = ((idx[0] * ny + idx[1]) * nz + idx[2]) * nc;
      float v = volume[base];
      for (std::size_t ch = 1; ch < nc; ++ch) v = std::max(v, volume[base + ch]);
      values[r * out.width + c] = v;
    }
  }

  const bool all_tristate = std::all_of(values.begin(), values.end(), [](float v) { return v == -1.0f || v == 0.0f || v == 1.0f; });
  const bool has_unknown = std::any_of(values.begin(), values.end(), [](float v) { return v == -1.0f; });
  bool as_tristate = tristate == TriStateMode::On || (tristate == TriStateMode::Auto && all_tristate && has_unknown);
  if (tristate == TriStateMode::On && !all_tristate) {
    throw Error(ErrorCode::RangeError, "tri-state rendering requires values in {-1, 0, 1}");
  }

  out.pixels.resize(values.size());
  if (as_tristate) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.pixels[i] = values[i] > 0.0f ? 255 : (values[i] == 0.0f ? 128 : 0);
    }
    return out;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = range > 0.0 ? (static_cast<double>(values[i]) - *lo) / range : 0.0;
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  return out;
}

std::vector<std::uint8_t> encode_pgm(const GraySlice& slice) {
  const std::string header = "P5\n" + std::to_string(slice.width) + " " + std::to_string(slice.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), slice.pixels.begin(), slice.pixels.end());
  return out;
}

DepthMap load_depth(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_depth_png(read_file_bytes(path));
  return DepthMap(blob_read(path));
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

/// Outputs are written next to their destination and renamed into place only
/// once every output of the command succeeded; otherwise they are removed.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;

  ~StagedOutputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, dst] : staged_) fs::remove(tmp, ec);
  }

  void write(const fs::path& destination, std::span<const std::uint8_t> bytes) {
    fs::path tmp = destination;
    tmp += ".partial";
    staged_.emplace_back(tmp, destination);
    write_file_bytes(tmp, bytes);
  }

  void commit() {
    for (const auto& [tmp, dst] : staged_) fs::rename(tmp, dst);
    committed_ = true;
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> staged_;
  bool committed_ = false;
};

Tensor to_float_tensor(const DepthVolume& v) {
  Tensor t(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v[i]);
  return t;
}

DepthVolume to_double_volume(const Tensor& t) {
  DepthVolume v(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<double>(t[i]);
  return v;
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;

  PipelineConfig load() const {
    ConfigOverrides o;
    if (!config_path.empty()) o = parse_config_text(read_text(config_path));
    for (const auto& s : settings) {
      auto [k, v] = parse_config_assignment(s);
      o[k] = v;
    }
    return build_config(o);
  }
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.settings, "override a config entry (key=value); repeatable");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depth thickness field and occupancy label toolkit"};
  app.require_subcommand(1);

  CommonOptions common;

  // encode
  auto* encode = app.add_subcommand("encode", "encode a depth map as one-hot bins or a soft-extended target");
  std::string enc_depth, enc_mode = "onehot", enc_out, enc_mask_out;
  encode->add_option("--depth", enc_depth, "16-bit depth PNG or rank-2 blob")->required()->check(CLI::ExistingFile);
  encode->add_option("--mode", enc_mode, "onehot | target")->check(CLI::IsMember({"onehot", "target"}));
  encode->add_option("--out", enc_out, "output blob (W_F, H_F, D)")->required();
  encode->add_option("--mask-out", enc_mask_out, "extension mask blob (target mode)");
  add_common(encode, common);

  // occ-labels
  auto* occ = app.add_subcommand("occ-labels", "tri-state occupancy labels from a scan and 3D boxes");
  std::string occ_velo, occ_labels, occ_calib, occ_out;
  occ->add_option("--velodyne", occ_velo, "packed float32 scan")->required()->check(CLI::ExistingFile);
  occ->add_option("--labels", occ_labels, "KITTI label file")->required()->check(CLI::ExistingFile);
  occ->add_option("--calib", occ_calib, "KITTI calib file")->required()->check(CLI::ExistingFile);
  occ->add_option("--out", occ_out, "output blob (X, Y, Z) with 1/0/-1")->required();
  add_common(occ, common);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "lift features into voxels and collapse to BEV");
  std::string pipe_depth, pipe_features, pipe_calib, pipe_voxels, pipe_bev, pipe_occ, pipe_thick;
  pipe->add_option("--depth", pipe_depth, "16-bit depth PNG or rank-2 blob")->required()->check(CLI::ExistingFile);
  pipe->add_option("--features", pipe_features, "feature blob (W_F, H_F, C)")->required()->check(CLI::ExistingFile);
  pipe->add_option("--calib", pipe_calib, "KITTI calib file")->required()->check(CLI::ExistingFile);
  pipe->add_option("--out-voxels", pipe_voxels, "voxel blob (X, Y, Z, C)")->required();
  pipe->add_option("--out-bev", pipe_bev, "BEV blob (X, Y, Z*C)")->required();
  pipe->add_option("--occupancy", pipe_occ, "occupancy blob (X, Y, Z) in [0, 1]")->check(CLI::ExistingFile);
  pipe->add_option("--thickness", pipe_thick, "thickness field blob (W_F, H_F, D) used instead of one-hot")
      ->check(CLI::ExistingFile);
  add_common(pipe, common);

  // loss
  auto* loss = app.add_subcommand("loss", "masked focal thickness loss of a predicted field");
  std::string loss_pred, loss_depth, loss_grad;
  bool loss_check = false;
  loss->add_option("--pred", loss_pred, "thickness field blob (W_F, H_F, D)")->required()->check(CLI::ExistingFile);
  loss->add_option("--depth", loss_depth, "16-bit depth PNG or rank-2 blob")->required()->check(CLI::ExistingFile);
  loss->add_option("--grad-out", loss_grad, "gradient blob");
  loss->add_flag("--check", loss_check, "compare against central finite differences");
  add_common(loss, common);

  // viz
  auto* viz = app.add_subcommand("viz", "render a slice of a volume as a binary PGM");
  std::string viz_blob, viz_axis = "z", viz_out, viz_tri = "auto";
  std::size_t viz_slice = 0;
  viz->add_option("--blob", viz_blob, "rank-3 or rank-4 blob")->required()->check(CLI::ExistingFile);
  viz->add_option("--axis", viz_axis, "x | y | z")->check(CLI::IsMember({"x", "y", "z"}));
  viz->add_option("--slice", viz_slice, "index along the axis")->required();
  viz->add_option("--out", viz_out, "output .pgm")->required();
  viz->add_option("--tristate", viz_tri, "auto | on | off")->check(CLI::IsMember({"auto", "on", "off"}));

  std::vector<std::string> argv_store{"monodtf"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    StagedOutputs outputs;
    if (*encode) {
      const auto config = common.load();
      const bool target = enc_mode == "target";
      const auto enc = encode_depth(load_depth(enc_depth), config, target);
      const auto& oh = enc.one_hot;
      outputs.write(enc_out, encode_blob(to_float_tensor(target ? *enc.target : oh.values)));
      if (target && !enc_mask_out.empty()) outputs.write(enc_mask_out, encode_blob(to_float_tensor(enc.mask->values)));
      outputs.commit();
      const auto clamped = std::count(oh.clamped.begin(), oh.clamped.end(), 1);
      out << "encoded " << oh.width() << "x" << oh.height() << "x" << oh.num_bins() << " (" << oh.valid_count()
          << " valid pixels, " << clamped << " clamped)\n";
    } else if (*occ) {
      const auto config = common.load();
      const auto calib = parse_calib(read_text(occ_calib));
      const auto labels = parse_labels(read_text(occ_labels));
      const auto points = read_velodyne(read_file_bytes(occ_velo));
      const auto grid = build_occupancy_labels(points, labels, calib, config);
      outputs.write(occ_out, encode_blob(grid.to_tensor()));
      outputs.commit();
      const auto c = grid.counts();
      out << "occupied " << c.occupied << " free " << c.free << " unknown " << c.unknown << "\n";
    } else if (*pipe) {
      const auto config = common.load();
      const auto calib = parse_calib(read_text(pipe_calib));
      const FeaturePlane features(blob_read(pipe_features));
      std::optional<ThicknessField> thickness;
      std::optional<OccupancyField> occupancy;
      if (!pipe_thick.empty()) thickness.emplace(to_double_volume(blob_read(pipe_thick)));
      if (!pipe_occ.empty()) occupancy.emplace(blob_read(pipe_occ));
      const auto result = run_pipeline(load_depth(pipe_depth), features, calib, config,
                                       thickness ? &*thickness : nullptr, occupancy ? &*occupancy : nullptr);
      outputs.write(pipe_voxels, encode_blob(result.voxels.values));
      outputs.write(pipe_bev, encode_blob(result.bev.values));
      outputs.commit();
      const auto& s = result.bev.values.shape();
      out << "bev " << s[0] << "x" << s[1] << "x" << s[2] << "\n";
    } else if (*loss) {
      const auto config = common.load();
      const ThicknessField pred(to_double_volume(blob_read(loss_pred)));
      const auto enc = encode_depth(load_depth(loss_depth), config, true);
      const auto result = thickness_focal_loss(pred, *enc.target, *enc.mask, config.focal, config.threads);
      if (!loss_grad.empty()) outputs.write(loss_grad, encode_blob(to_float_tensor(result.grad)));
      outputs.commit();
      char line[64];
      std::snprintf(line, sizeof line, "%.9f", result.loss);
      out << "loss " << line << "\n";
      if (loss_check) {
        const auto check = check_thickness_gradient(pred, *enc.target, *enc.mask, config.focal);
        std::snprintf(line, sizeof line, "%.3e", check.max_rel_error);
        out << "gradient check: max relative error " << line << " over " << check.checked << " entries ("
            << check.skipped << " skipped)\n";
      }
    } else if (*viz) {
      const int axis = viz_axis == "x" ? 0 : viz_axis == "y" ? 1 : 2;
      const TriStateMode mode = viz_tri == "on" ? TriStateMode::On : viz_tri == "off" ? TriStateMode::Off : TriStateMode::Auto;
      const auto slice = render_slice(blob_read(viz_blob), axis, viz_slice, mode);
      outputs.write(viz_out, encode_pgm(slice));
      outputs.commit();
      out << "slice " << slice.width << "x" << slice.height << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace monodtf
