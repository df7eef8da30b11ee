#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "expect_error.hpp"
#include "monodtf/cli.hpp"
#include "monodtf/config.hpp"
#include "monodtf/kitti_io.hpp"
#include "monodtf/pipeline.hpp"
#include "monodtf/tensor_blob.hpp"
#include "oracles.hpp"

using namespace monodtf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("monodtf_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  fs::path path;
};

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::string& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string scene_config() {
  return "# synthetic scene\n"
         "x_min = 4\nx_max = 24\ny_min = -10\ny_max = 10\nz_min = -10\nz_max = 10\nvoxel_size = 1\n"
         "d_min = 2\nd_max = 26\nnum_bins = 12\nfeature_stride = 8\n";
}

std::string cube_config() {
  return "x_min = 0\nx_max = 20\ny_min = 0\ny_max = 20\nz_min = 0\nz_max = 20\nvoxel_size = 1\n";
}

DepthMap random_depth(std::mt19937_64& rng, std::size_t w, std::size_t h, float lo, float hi) {
  std::uniform_real_distribution<float> depth(lo, hi);
  std::uniform_real_distribution<double> unit(0, 1);
  DepthMap d(w, h);
  for (std::size_t u = 0; u < w; ++u)
    for (std::size_t v = 0; v < h; ++v)
      if (unit(rng) < 0.85) d.set(u, v, std::round(depth(rng) * 256.0f) / 256.0f);
  return d;
}

std::vector<std::uint8_t> read_pgm_pixels(const std::string& path, std::size_t& w, std::size_t& h) {
  const auto bytes = read_file_bytes(path);
  std::string text(bytes.begin(), bytes.end());
  std::istringstream in(text);
  std::string magic;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  REQUIRE(magic == "P5");
  REQUIRE(maxval == 255);
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  REQUIRE(bytes.size() == offset + w * h);
  return {bytes.begin() + static_cast<long>(offset), bytes.end()};
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto c = build_config({});
  CHECK(c.bins == BinSpec(2.0, 46.8, 80));
  CHECK(c.grid == GridSpec::kitti());
  CHECK_FALSE(c.extension_radius);
  CHECK_ERROR_CODE(c.require_extension_radius(), ErrorCode::MissingKey);
  CHECK(c.shrink_scale == 0.8);
  CHECK(c.focal.alpha == 0.25);
  CHECK(c.focal.gamma == 2.0);
  CHECK(c.feature_stride == 4);
  CHECK(c.categories == std::vector<std::string>{"Car"});

  const auto o = parse_config_text("num_bins = 40 # fewer bins\n\n# comment\nextension_radius=2\n"
                                   "categories = Car, Van\ndownsample = minpool\nsampling = nearest\n");
  const auto c2 = build_config(o);
  CHECK(c2.bins.num_bins() == 40);
  CHECK(c2.require_extension_radius() == 2);
  CHECK(c2.categories == std::vector<std::string>{"Car", "Van"});
  CHECK(c2.downsample == DownsampleMode::MinPool);
  CHECK(c2.sampling == SamplingMode::Nearest);
  CHECK(build_config(parse_config_text(format_config(c2))).bins == c2.bins);
  CHECK(format_config(build_config(parse_config_text(format_config(c2)))) == format_config(c2));
}

TEST_CASE("config errors") {
  CHECK_ERROR_CODE(parse_config_text("bogus = 1\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(parse_config_text("num_bins 4\n"), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(build_config(parse_config_text("num_bins = four\n")), ErrorCode::MalformedNumber);
  CHECK_ERROR_CODE(build_config(parse_config_text("d_min = 1.5x\n")), ErrorCode::MalformedNumber);
  CHECK_ERROR_CODE(build_config(parse_config_text("voxel_size = 0.3\n")), ErrorCode::NonCommensurateRange);
  CHECK_ERROR_CODE(build_config(parse_config_text("shrink_scale = 1.5\n")), ErrorCode::BadScale);
  CHECK_ERROR_CODE(build_config(parse_config_text("focal_alpha = 0\n")), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(build_config(parse_config_text("extension_radius = -1\n")), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(build_config(parse_config_text("downsample = average\n")), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(build_config(parse_config_text("d_min = 50\n")), ErrorCode::InvalidArgument);
}

TEST_CASE("encode command") {
  TempDir dir;
  DepthMap d(2, 2);
  d.set(0, 0, 3.0f);
  d.set(1, 0, 10.0f);
  d.set(0, 1, 40.0f);
  d.set(1, 1, 20.0f);
  write_file_bytes(dir / "depth.png", write_depth_png(d));
  const std::vector<std::string> base{"--set", "feature_stride=1", "--set", "num_bins=4"};
  auto args = std::vector<std::string>{"encode", "--depth", dir / "depth.png", "--out", dir / "onehot.bin"};
  args.insert(args.end(), base.begin(), base.end());
  const auto r = cli(args);
  REQUIRE(r.code == 0);
  const auto t = blob_read(dir / "onehot.bin");
  CHECK(t.shape() == Tensor::Shape{2, 2, 4});
  for (std::size_t p = 0; p < 4; ++p) {
    float sum = 0;
    for (std::size_t k = 0; k < 4; ++k) sum += t[p * 4 + k];
    CHECK(sum == 1.0f);
  }

  auto target_args = std::vector<std::string>{"encode", "--depth", dir / "depth.png", "--mode", "target",
                                              "--out", dir / "target.bin", "--mask-out", dir / "mask.bin",
                                              "--set", "extension_radius=0"};
  target_args.insert(target_args.end(), base.begin(), base.end());
  REQUIRE(cli(target_args).code == 0);
  CHECK(blob_read(dir / "target.bin") == t);
  const auto mask_blob = blob_read(dir / "mask.bin");
  for (float m : mask_blob.data()) CHECK(m == 1.0f);

  target_args.back() = "num_bins=20";
  target_args[target_args.size() - 5] = "extension_radius=2";
  REQUIRE(cli(target_args).code == 0);
  const auto mask = blob_read(dir / "mask.bin");
  for (std::size_t p = 0; p < 4; ++p) {
    int zeros = 0;
    for (std::size_t k = 0; k < 20; ++k) zeros += mask[p * 20 + k] == 0.0f;
    CHECK(zeros <= 4);
  }
}

TEST_CASE("failed commands leave no outputs") {
  TempDir dir;
  DepthMap d(2, 2);
  d.set(0, 0, 3.0f);
  write_file_bytes(dir / "depth.png", write_depth_png(d));
  const auto r = cli({"encode", "--depth", dir / "depth.png", "--mode", "target", "--out", dir / "t.bin",
                      "--mask-out", dir / "m.bin", "--set", "feature_stride=1"});
  CHECK(r.code != 0);
  CHECK(r.err.find("MissingKey") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "t.bin"));
  CHECK_FALSE(fs::exists(dir / "t.bin.partial"));
  CHECK_FALSE(fs::exists(dir / "m.bin"));
  CHECK(cli({"encode", "--depth", dir / "missing.png", "--out", dir / "t.bin"}).code != 0);
  CHECK(cli({"frobnicate"}).code != 0);
  CHECK(cli({"encode", "--depth", dir / "depth.png", "--out", dir / "t.bin", "--set", "nope=1"}).code != 0);
}

TEST_CASE("occ-labels command") {
  TempDir dir;
  const auto scene = oracle::synthetic_scene();
  write_text(dir / "calib.txt", format_calib(scene.calib));
  write_text(dir / "cube.cfg", cube_config());
  write_file_bytes(dir / "empty.bin", std::vector<std::uint8_t>{});
  write_text(dir / "none.txt", "");
  const std::vector<std::string> common{"--calib", dir / "calib.txt", "--config", dir / "cube.cfg"};

  auto run = [&](const std::string& velo, const std::string& labels, const std::string& out) {
    std::vector<std::string> args{"occ-labels", "--velodyne", velo, "--labels", labels, "--out", out};
    args.insert(args.end(), common.begin(), common.end());
    return cli(args);
  };
  REQUIRE(run(dir / "empty.bin", dir / "none.txt", dir / "empty_out.bin").code == 0);
  const auto empty_labels = blob_read(dir / "empty_out.bin");
  for (float x : empty_labels.data()) CHECK(x == -1.0f);

  // A box in camera coordinates that lands inside the cube grid.
  KittiLabelRecord rec;
  rec.category = "Car";
  rec.bbox = {0, 0, 10, 10};
  rec.h = 3.1;
  rec.w = 4.3;
  rec.l = 6.7;
  rec.location = {-9.6, -8.0, 10.5};
  rec.rotation_y = 0.6;
  KittiLabelRecord ped = rec;
  ped.category = "Pedestrian";
  ped.location = {-4.0, -4.0, 16.0};
  write_text(dir / "labels.txt", format_label(rec) + format_label(ped));
  REQUIRE(run(dir / "empty.bin", dir / "labels.txt", dir / "box_out.bin").code == 0);
  const auto grid = build_config(parse_config_text(cube_config())).grid;
  const auto box = label_to_world_box(rec, scene.calib);
  const auto expected = oracle::box_labels_exhaustive({box}, 0.8, grid);
  const auto got = blob_read(dir / "box_out.bin");
  std::size_t occupied = 0, expected_occupied = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    occupied += got[i] == 1.0f;
    expected_occupied += expected[i] == 1;
    CHECK(got[i] == static_cast<float>(expected[i]));
  }
  CHECK(occupied == expected_occupied);
  CHECK(occupied > 0);

  std::mt19937_64 rng(151);
  std::uniform_real_distribution<double> c(0, 20);
  PointCloud pts;
  for (int i = 0; i < 300; ++i) pts.emplace_back(c(rng), c(rng), c(rng));
  write_file_bytes(dir / "scan.bin", write_velodyne(pts));
  REQUIRE(run(dir / "scan.bin", dir / "none.txt", dir / "points_only.bin").code == 0);
  REQUIRE(run(dir / "scan.bin", dir / "labels.txt", dir / "both.bin").code == 0);
  std::size_t occ_points = 0, occ_both = 0;
  const auto points_only = blob_read(dir / "points_only.bin");
  for (float x : points_only.data()) occ_points += x == 1.0f;
  const auto both_labels = blob_read(dir / "both.bin");
  for (float x : both_labels.data()) occ_both += x == 1.0f;
  CHECK(occ_both >= occ_points);
  CHECK(occ_both > occ_points);
}

TEST_CASE("pipeline command matches the brute-force oracle") {
  TempDir dir;
  const auto scene = oracle::synthetic_scene();
  std::mt19937_64 rng(157);
  const auto depth = random_depth(rng, 64, 64, 1.0f, 30.0f);
  const auto features = oracle::random_tensor(rng, {8, 8, 3}, -1, 1);
  write_file_bytes(dir / "depth.png", write_depth_png(depth));
  blob_write(features, dir / "features.bin");
  write_text(dir / "calib.txt", format_calib(scene.calib));
  write_text(dir / "scene.cfg", scene_config());
  const std::vector<std::string> args{"pipeline", "--depth", dir / "depth.png", "--features", dir / "features.bin",
                                      "--calib", dir / "calib.txt", "--config", dir / "scene.cfg",
                                      "--out-voxels", dir / "voxels.bin", "--out-bev", dir / "bev.bin"};
  const auto r = cli(args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out == "bev 20x20x60\n");

  const auto calib = parse_calib(format_calib(scene.calib));
  const auto one_hot = encode_one_hot(downsample_depth(depth, 8, DownsampleMode::Nearest), scene.bins);
  const auto expected = oracle::sample_brute_force(oracle::lift_loop(one_hot.values, features), calib, scene.grid,
                                                   scene.bins, 8, false);
  const auto voxels = blob_read(dir / "voxels.bin");
  REQUIRE(voxels.shape() == expected.shape());
  float worst = 0;
  for (std::size_t i = 0; i < voxels.size(); ++i) worst = std::max(worst, std::abs(voxels[i] - expected[i]));
  CHECK(worst < 1e-6f);
  const auto bev = blob_read(dir / "bev.bin");
  CHECK(bev.shape() == Tensor::Shape{20, 20, 60});
  CHECK(bev.vector() == voxels.vector());

  // An all-ones gate changes nothing.
  blob_write(Tensor({20, 20, 20}, 1.0f), dir / "ones.bin");
  auto gated = args;
  gated.back() = dir / "bev_gated.bin";
  gated.insert(gated.end(), {"--occupancy", dir / "ones.bin"});
  REQUIRE(cli(gated).code == 0);
  CHECK(read_file_bytes(dir / "bev_gated.bin") == read_file_bytes(dir / "bev.bin"));

  // Thread count does not change the bytes.
  auto threaded = args;
  threaded.back() = dir / "bev_t8.bin";
  threaded.insert(threaded.end(), {"--set", "threads=8"});
  REQUIRE(cli(threaded).code == 0);
  CHECK(read_file_bytes(dir / "bev_t8.bin") == read_file_bytes(dir / "bev.bin"));
}

TEST_CASE("pipeline with constant features stays inside the frustum") {
  TempDir dir;
  const auto scene = oracle::synthetic_scene();
  std::mt19937_64 rng(163);
  write_file_bytes(dir / "depth.png", write_depth_png(random_depth(rng, 64, 64, 2.0f, 26.0f)));
  blob_write(Tensor({8, 8, 1}, 1.0f), dir / "features.bin");
  write_text(dir / "calib.txt", format_calib(scene.calib));
  write_text(dir / "scene.cfg", scene_config());
  REQUIRE(cli({"pipeline", "--depth", dir / "depth.png", "--features", dir / "features.bin", "--calib",
               dir / "calib.txt", "--config", dir / "scene.cfg", "--out-voxels", dir / "v.bin", "--out-bev",
               dir / "b.bin"})
              .code == 0);
  const auto v = blob_read(dir / "v.bin");
  std::size_t i = 0, mass = 0;
  for (int x = 0; x < 20; ++x)
    for (int y = 0; y < 20; ++y)
      for (int z = 0; z < 20; ++z, ++i) {
        if (v[i] == 0.0f) continue;
        ++mass;
        CHECK(oracle::project_world(scene.grid.voxel_center({x, y, z}), scene.calib, scene.bins, 8, 8, 8).inside);
      }
  CHECK(mass > 0);
}

TEST_CASE("pipeline names the failing stage") {
  TempDir dir;
  const auto scene = oracle::synthetic_scene();
  DepthMap depth(64, 64);
  write_file_bytes(dir / "depth.png", write_depth_png(depth));
  blob_write(Tensor({7, 8, 2}, 1.0f), dir / "features.bin");
  write_text(dir / "calib.txt", format_calib(scene.calib));
  write_text(dir / "scene.cfg", scene_config());
  const auto r = cli({"pipeline", "--depth", dir / "depth.png", "--features", dir / "features.bin", "--calib",
                      dir / "calib.txt", "--config", dir / "scene.cfg", "--out-voxels", dir / "v.bin", "--out-bev",
                      dir / "b.bin"});
  CHECK(r.code != 0);
  CHECK(r.err.find("stage 'lift'") != std::string::npos);
  CHECK(r.err.find("DimMismatch") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "v.bin"));
  CHECK_FALSE(fs::exists(dir / "b.bin"));
  CHECK_FALSE(fs::exists(dir / "v.bin.partial"));
}

TEST_CASE("loss command") {
  TempDir dir;
  std::mt19937_64 rng(167);
  const auto depth = random_depth(rng, 4, 4, 2.0f, 46.0f);
  write_file_bytes(dir / "depth.png", write_depth_png(depth));
  const auto config = build_config(parse_config_text("feature_stride = 1\nnum_bins = 8\nextension_radius = 1\n"));
  write_text(dir / "loss.cfg", format_config(config));
  const auto one_hot = encode_one_hot(depth, config.bins);
  blob_write(Tensor({4, 4, 8}, std::vector<float>(one_hot.values.data().begin(), one_hot.values.data().end())),
             dir / "perfect.bin");
  auto r = cli({"loss", "--pred", dir / "perfect.bin", "--depth", dir / "depth.png", "--config", dir / "loss.cfg"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "loss 0.000000000\n");

  blob_write(oracle::random_tensor(rng, {4, 4, 8}, 0.05f, 0.95f), dir / "pred.bin");
  r = cli({"loss", "--pred", dir / "pred.bin", "--depth", dir / "depth.png", "--config", dir / "loss.cfg", "--check",
           "--grad-out", dir / "grad.bin"});
  REQUIRE(r.code == 0);
  const auto pos = r.out.find("max relative error ");
  REQUIRE(pos != std::string::npos);
  const double reported = std::stod(r.out.substr(pos + 19));
  CHECK(reported < 1e-5);
  CHECK(blob_read(dir / "grad.bin").shape() == Tensor::Shape{4, 4, 8});

  auto bytes = read_file_bytes(dir / "pred.bin");
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int k = 0; k < 4; ++k) bytes[20 + static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(nan_bits >> (8 * k));
  write_file_bytes(dir / "nan.bin", bytes);
  r = cli({"loss", "--pred", dir / "nan.bin", "--depth", dir / "depth.png", "--config", dir / "loss.cfg"});
  CHECK(r.code != 0);
  CHECK(r.err.find("NonFiniteInput") != std::string::npos);
}

TEST_CASE("viz command") {
  TempDir dir;
  std::size_t w = 0, h = 0;
  blob_write(Tensor({4, 5, 6}, 0.0f), dir / "zeros.bin");
  REQUIRE(cli({"viz", "--blob", dir / "zeros.bin", "--axis", "z", "--slice", "2", "--out", dir / "zeros.pgm"}).code == 0);
  const auto flat = read_pgm_pixels(dir / "zeros.pgm", w, h);
  CHECK(w == 4);
  CHECK(h == 5);
  CHECK(std::set<std::uint8_t>(flat.begin(), flat.end()).size() == 1);

  std::mt19937_64 rng(173);
  std::uniform_int_distribution<int> s(-1, 1);
  Tensor tri({6, 6, 3});
  for (auto& x : tri.data()) x = static_cast<float>(s(rng));
  blob_write(tri, dir / "tri.bin");
  REQUIRE(cli({"viz", "--blob", dir / "tri.bin", "--axis", "y", "--slice", "1", "--out", dir / "tri.pgm"}).code == 0);
  const auto levels = read_pgm_pixels(dir / "tri.pgm", w, h);
  CHECK(std::set<std::uint8_t>(levels.begin(), levels.end()) == std::set<std::uint8_t>{0, 128, 255});

  // Aligned box: x cells 7..12, y cells 8..11, z cells 9..10.
  const auto grid = oracle::cube_grid();
  const OrientedBox3D box({10, 10, 10}, 2.0, 4.0, 6.0, 0.0);
  blob_write(box_labels(std::span(&box, 1), 1.0, grid).to_tensor(), dir / "boxes.bin");
  REQUIRE(cli({"viz", "--blob", dir / "boxes.bin", "--slice", "9", "--out", dir / "boxes.pgm"}).code == 0);
  const auto img = read_pgm_pixels(dir / "boxes.pgm", w, h);
  REQUIRE(w == 20);
  REQUIRE(h == 20);
  for (std::size_t row = 0; row < 20; ++row)
    for (std::size_t col = 0; col < 20; ++col) {
      const bool inside = col >= 7 && col <= 12 && row >= 8 && row <= 11;
      CHECK(img[row * 20 + col] == (inside ? 255 : 0));
    }

  const auto r = cli({"viz", "--blob", dir / "boxes.bin", "--slice", "20", "--out", dir / "bad.pgm"});
  CHECK(r.code != 0);
  CHECK(r.err.find("SliceOutOfRange") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "bad.pgm"));
}

TEST_CASE("render slice of a rank-4 volume uses the channel maximum") {
  Tensor v({2, 2, 1, 2}, {0, 1, 2, 0, 5, 3, 0, 0});
  const auto s = render_slice(v, 2, 0, TriStateMode::Auto);
  // Values (max over channels): (0,0)=1, (0,1)=2, (1,0)=5, (1,1)=0.
  CHECK(s.pixels == std::vector<std::uint8_t>{51, 255, 102, 0});
  CHECK_ERROR_CODE(render_slice(v, 2, 1, TriStateMode::Auto), ErrorCode::SliceOutOfRange);
}
