#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hyslam/io/calibration_io.hpp"
#include "hyslam/io/errors.hpp"
#include "hyslam/io/feature_io.hpp"
#include "hyslam/io/manifest.hpp"
#include "hyslam/io/trajectory_io.hpp"

using namespace hyslam;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hyslam_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("calibration round trips and validation") {
  TempDir dir;

  SUBCASE("stereo document round trip") {
    const std::string text =
        "camera_kind pinhole_stereo\n"
        "fx 450\nfy 451\ncx 360\ncy 270\nwidth 720\nheight 540\n"
        "baseline 0.12\n";
    Camera camera = parseCalibration(text);
    REQUIRE(camera.kind == CameraKind::kStereo);
    CHECK(camera.rig.baseline == 0.12);
    saveCalibration(camera, dir.file("stereo.txt"));
    Camera reloaded = loadCalibration(dir.file("stereo.txt"));
    CHECK(reloaded.rig.left.fx == camera.rig.left.fx);
    CHECK(reloaded.rig.baseline == camera.rig.baseline);
  }

  SUBCASE("negative focal names the key") {
    const std::string text =
        "camera_kind pinhole_stereo\n"
        "fx -1\nfy 451\ncx 360\ncy 270\nwidth 720\nheight 540\n"
        "baseline 0.12\n";
    try {
      parseCalibration(text);
      FAIL("expected InvalidCalibration");
    } catch (const InvalidCalibration& e) {
      CHECK(e.offending_key == "fx");
    }
  }

  SUBCASE("non-monotone distortion over a stated FOV is rejected") {
    const std::string text =
        "camera_kind kannala_brandt\n"
        "fx 280\nfy 280\ncx 320\ncy 240\nwidth 640\nheight 480\n"
        "k1 -0.3\nk2 0\nk3 0\nk4 0\ntheta_max_deg 90\n";
    CHECK_THROWS_AS(parseCalibration(text), InvalidCalibration);
  }

  SUBCASE("defaulted FOV is clamped to the monotone range") {
    const std::string text =
        "camera_kind kannala_brandt\n"
        "fx 280\nfy 280\ncx 320\ncy 240\nwidth 640\nheight 480\n"
        "k1 -0.3\nk2 0\nk3 0\nk4 0\n";
    Camera camera = parseCalibration(text);
    CHECK(camera.fisheye.distortionMonotone());
    CHECK(camera.fisheye.theta_max < 95.0 * M_PI / 180.0);
  }
}

TEST_CASE("feature files") {
  TempDir dir;
  std::mt19937 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Feature> features;
  for (int i = 0; i < 25; ++i) {
    Feature f;
    f.u = 10.0 * i + 0.25;
    f.v = 3.0 * i;
    f.scale_sigma = 1.5 + 0.1 * i;
    f.orientation = 0.1 * i;
    f.right_u = i % 3 == 0 ? -1.0 : f.u - 5.0;
    for (int k = 0; k < kDescriptorDim; ++k)
      f.descriptor[k] = static_cast<float>(g(rng));
    f.descriptor.normalize();
    features.push_back(f);
  }

  SUBCASE("bitwise round trip") {
    saveFeatures(features, dir.file("f.bin"));
    auto loaded = loadFeatures(dir.file("f.bin"));
    REQUIRE(loaded.size() == features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      CHECK(loaded[i].u == features[i].u);
      CHECK(loaded[i].v == features[i].v);
      CHECK(loaded[i].scale_sigma == features[i].scale_sigma);
      CHECK(loaded[i].orientation == features[i].orientation);
      CHECK(loaded[i].right_u == features[i].right_u);
      CHECK(loaded[i].descriptor == features[i].descriptor);
    }
  }

  SUBCASE("wrong descriptor dimension") {
    saveFeatures(features, dir.file("f.bin"));
    std::fstream io(dir.file("f.bin"),
                    std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(12);
    const std::uint32_t dim = 64;
    io.write(reinterpret_cast<const char*>(&dim), 4);
    io.close();
    CHECK_THROWS_AS(loadFeatures(dir.file("f.bin")), DimensionMismatch);
  }

  SUBCASE("truncation reports the byte offset") {
    saveFeatures(features, dir.file("f.bin"));
    const auto full = fs::file_size(dir.file("f.bin"));
    fs::resize_file(dir.file("f.bin"), full - 100);
    try {
      loadFeatures(dir.file("f.bin"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
  }

  SUBCASE("denormalized descriptors are renormalized with a warning") {
    auto scaled = features;
    for (auto& f : scaled) f.descriptor *= 1.1f;
    saveFeatures(scaled, dir.file("f.bin"));
    int warnings = 0;
    auto loaded = loadFeatures(dir.file("f.bin"), &warnings);
    CHECK(warnings == static_cast<int>(features.size()));
    for (const auto& f : loaded)
      CHECK(std::abs(f.descriptor.norm() - 1.0f) < 1e-6f);
  }
}

TEST_CASE("trajectory files") {
  TempDir dir;
  Trajectory trajectory;
  std::mt19937 rng(43);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    trajectory.push(0.1 * i,
                    Pose(q, Eigen::Vector3d(g(rng), g(rng), g(rng))));
  }

  SUBCASE("round trip within 1e-12") {
    writeTrajectory(trajectory, dir.file("t.txt"));
    Trajectory loaded = readTrajectory(dir.file("t.txt"));
    REQUIRE(loaded.size() == trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
      CHECK(loaded.poses[i].timestamp == trajectory.poses[i].timestamp);
      CHECK(loaded.poses[i].pose.rotationAngleTo(trajectory.poses[i].pose) <
            1e-12);
      CHECK((loaded.poses[i].pose.translation() -
             trajectory.poses[i].pose.translation())
                .norm() < 1e-12);
    }
  }

  SUBCASE("malformed line is reported with its number") {
    std::ofstream out(dir.file("bad.txt"));
    out << "# header comment\n";
    for (int i = 0; i < 5; ++i)
      out << i * 0.1 << " 0 0 0 0 0 0 1\n";
    out << "0.6 broken line\n";
    out.close();
    try {
      readTrajectory(dir.file("bad.txt"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
  }

  SUBCASE("comments are ignored") {
    std::ofstream out(dir.file("c.txt"));
    out << "# comment\n0.0 1 2 3 0 0 0 1\n# another\n0.1 4 5 6 0 0 0 1\n";
    out.close();
    Trajectory loaded = readTrajectory(dir.file("c.txt"));
    CHECK(loaded.size() == 2);
    CHECK(loaded.poses[1].pose.translation() == Eigen::Vector3d(4, 5, 6));
  }
}

TEST_CASE("sequence manifest") {
  TempDir dir;
  // Create the referenced files so validation passes.
  const std::string stereo_calib =
      "camera_kind pinhole_stereo\nfx 450\nfy 450\ncx 360\ncy 270\n"
      "width 720\nheight 540\nbaseline 0.12\n";
  const std::string fisheye_calib =
      "camera_kind kannala_brandt\nfx 280\nfy 280\ncx 320\ncy 240\n"
      "width 640\nheight 480\nk1 0\nk2 0\nk3 0\nk4 0\n";
  std::ofstream(dir.file("cs.txt")) << stereo_calib;
  std::ofstream(dir.file("cf.txt")) << fisheye_calib;
  saveFeatures({}, dir.file("frame0.bin"));
  saveFeatures({}, dir.file("frame1.bin"));

  SequenceManifest manifest;
  manifest.stereo_calibration_path = "cs.txt";
  manifest.fisheye_calibration_path = "cf.txt";
  manifest.frames = {{0.0, CameraKind::kStereo, "frame0.bin"},
                     {0.05, CameraKind::kFisheye, "frame1.bin"}};
  saveManifest(manifest, dir.file("manifest.txt"));

  SUBCASE("round trip resolves paths") {
    SequenceManifest loaded = loadManifest(dir.file("manifest.txt"));
    REQUIRE(loaded.frames.size() == 2);
    CHECK(loaded.frames[0].kind == CameraKind::kStereo);
    CHECK(loaded.frames[1].kind == CameraKind::kFisheye);
    CHECK(fs::exists(loaded.frames[0].feature_path));
    CHECK(fs::exists(loaded.stereo_calibration_path));
  }

  SUBCASE("missing referenced file is rejected") {
    SequenceManifest broken = manifest;
    broken.frames.push_back({0.1, CameraKind::kStereo, "missing.bin"});
    saveManifest(broken, dir.file("broken.txt"));
    CHECK_THROWS_AS(loadManifest(dir.file("broken.txt")), ParseError);
  }

  SUBCASE("decreasing timestamps are rejected") {
    SequenceManifest broken = manifest;
    broken.frames.push_back({0.01, CameraKind::kStereo, "frame0.bin"});
    saveManifest(broken, dir.file("broken.txt"));
    CHECK_THROWS_AS(loadManifest(dir.file("broken.txt")), ParseError);
  }
}
