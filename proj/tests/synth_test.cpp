#include <doctest.h>

#include <filesystem>
#include <random>

#include "hyslam/geometry/triangulation.hpp"
#include "hyslam/io/manifest.hpp"
#include "hyslam/synth/synthetic_world.hpp"

using namespace hyslam;

namespace {

SceneSpec quickSpec() {
  SceneSpec spec;
  spec.landmark_count = 600;
  spec.frame_count = 12;
  spec.seed = 9;
  return spec;
}

}  // namespace

TEST_CASE("world generation is deterministic") {
  const SyntheticWorld a = generateWorld(quickSpec());
  const SyntheticWorld b = generateWorld(quickSpec());
  REQUIRE(a.landmarks.size() == b.landmarks.size());
  for (std::size_t i = 0; i < a.landmarks.size(); ++i) {
    CHECK(a.landmarks[i] == b.landmarks[i]);
    CHECK(a.descriptors[i] == b.descriptors[i]);
  }
  for (std::size_t i = 0; i < a.stereo_trajectory.size(); ++i) {
    CHECK(a.stereo_trajectory.poses[i].pose.translation() ==
          b.stereo_trajectory.poses[i].pose.translation());
  }
}

TEST_CASE("descriptors respect the separability floor") {
  SceneSpec spec = quickSpec();
  spec.landmark_count = 150;
  const SyntheticWorld world = generateWorld(spec);
  for (std::size_t i = 0; i < world.descriptors.size(); ++i) {
    CHECK(std::abs(world.descriptors[i].norm() - 1.0f) < 1e-6f);
    for (std::size_t j = i + 1; j < world.descriptors.size(); ++j)
      CHECK(descriptorDistance(world.descriptors[i], world.descriptors[j]) >=
            spec.descriptor_separation);
  }
}

TEST_CASE("spiral survey stays within its radius and revisits the start") {
  SceneSpec spec = quickSpec();
  spec.trajectory = TrajectoryKind::kSpiralSurvey;
  spec.frame_count = 50;
  spec.spiral_radius = 7.0;
  const SyntheticWorld world = generateWorld(spec);
  const Eigen::Vector3d center =
      world.stereo_trajectory.poses.front().pose.translation();
  for (const auto& sp : world.stereo_trajectory.poses)
    CHECK((sp.pose.translation() - center).norm() <= 7.0);
  const Eigen::Vector3d last =
      world.stereo_trajectory.poses.back().pose.translation();
  CHECK((last - center).norm() < 0.2);
}

TEST_CASE("arm sweep keeps the fisheye near the parked vehicle") {
  SceneSpec spec = quickSpec();
  spec.trajectory = TrajectoryKind::kStaticVehicleArmSweep;
  const SyntheticWorld world = generateWorld(spec);
  const Eigen::Vector3d vehicle =
      world.stereo_trajectory.poses.front().pose.translation();
  for (const auto& sp : world.stereo_trajectory.poses)
    CHECK((sp.pose.translation() - vehicle).norm() < 1e-12);
  for (const auto& sp : world.fisheye_trajectory.poses)
    CHECK((sp.pose.translation() - vehicle).norm() <= 1.5);
}

TEST_CASE("zero-noise stereo render round-trips through triangulation") {
  const SyntheticWorld world = generateWorld(quickSpec());
  const FrameRender render = renderFrame(world, 0, CameraKind::kStereo);
  REQUIRE(render.features.size() > 50);
  const Pose camera_in_world = world.stereo_trajectory.poses[0].pose;
  for (std::size_t i = 0; i < render.features.size(); ++i) {
    const Feature& f = render.features[i];
    auto p_cam = triangulateStereo(f.u, f.v, f.right_u,
                                   world.stereo_camera->rig);
    REQUIRE(p_cam.ok());
    const Eigen::Vector3d recovered = camera_in_world * p_cam.value();
    CHECK((recovered - world.landmarks[render.landmark_of_feature[i]])
              .norm() < 1e-9);
  }
}

TEST_CASE("fisheye render projects exactly") {
  const SyntheticWorld world = generateWorld(quickSpec());
  const FrameRender render = renderFrame(world, 0, CameraKind::kFisheye);
  REQUIRE(render.features.size() > 50);
  const Pose w2c = world.fisheye_trajectory.poses[0].pose.inverse();
  for (std::size_t i = 0; i < render.features.size(); ++i) {
    const int lm = render.landmark_of_feature[i];
    auto pix = world.fisheye_camera->projectMono(w2c * world.landmarks[lm]);
    REQUIRE(pix.ok());
    CHECK(std::hypot(pix.value().x() - render.features[i].u,
                     pix.value().y() - render.features[i].v) < 1e-12);
  }
}

TEST_CASE("landmarks behind the camera never render") {
  SyntheticWorld world = generateWorld(quickSpec());
  // Plant a landmark above the down-looking camera.
  world.landmarks.push_back(Eigen::Vector3d(0, 0, 100.0));
  world.descriptors.push_back(world.descriptors.front());
  world.patch_sizes.push_back(0.03);
  const int planted = static_cast<int>(world.landmarks.size()) - 1;
  for (CameraKind kind : {CameraKind::kStereo, CameraKind::kFisheye}) {
    const FrameRender render = renderFrame(world, 0, kind);
    for (int lm : render.landmark_of_feature) CHECK(lm != planted);
  }
}

TEST_CASE("outlier injection hits the configured rate") {
  SceneSpec spec = quickSpec();
  spec.landmark_count = 2000;
  spec.noise.outlier_rate = 0.3;
  const SyntheticWorld world = generateWorld(spec);
  const FrameRender render = renderFrame(world, 0, CameraKind::kStereo);
  int outliers = 0;
  for (int lm : render.landmark_of_feature)
    if (lm < 0) ++outliers;
  const double n = static_cast<double>(render.landmark_of_feature.size());
  const double fraction = outliers / n;
  // Three binomial standard deviations around 0.3.
  const double tolerance = 3.0 * std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(fraction - 0.3) < tolerance);
}

TEST_CASE("renders are deterministic and order independent") {
  const SyntheticWorld world = generateWorld(quickSpec());
  const FrameRender late = renderFrame(world, 5, CameraKind::kStereo);
  renderFrame(world, 2, CameraKind::kFisheye);  // unrelated render between
  const FrameRender again = renderFrame(world, 5, CameraKind::kStereo);
  REQUIRE(late.features.size() == again.features.size());
  for (std::size_t i = 0; i < late.features.size(); ++i) {
    CHECK(late.features[i].u == again.features[i].u);
    CHECK(late.features[i].descriptor == again.features[i].descriptor);
  }
}

TEST_CASE("scene spec parsing") {
  const SceneSpec spec = parseSceneSpec(
      "# demo scene\n"
      "trajectory static_vehicle_arm_sweep\n"
      "landmark_count 321\n"
      "frame_count 17\n"
      "seed 99\n"
      "outlier_rate 0.1\n");
  CHECK(spec.trajectory == TrajectoryKind::kStaticVehicleArmSweep);
  CHECK(spec.landmark_count == 321);
  CHECK(spec.frame_count == 17);
  CHECK(spec.seed == 99);
  CHECK(spec.noise.outlier_rate == 0.1);

  CHECK_THROWS_AS(parseSceneSpec("trajectory drunken_walk\n"), InvalidSpec);
  CHECK_THROWS_AS(parseSceneSpec("landmark_count -3\n"), InvalidSpec);
}

TEST_CASE("exported sequences load through the dataset boundary") {
  namespace fs = std::filesystem;
  SceneSpec spec = quickSpec();
  spec.landmark_count = 200;
  spec.frame_count = 4;
  const SyntheticWorld world = generateWorld(spec);
  const fs::path dir =
      fs::temp_directory_path() /
      ("hyslam_synth_export_" + std::to_string(std::random_device{}()));
  const std::string manifest_path = exportSequence(world, dir.string());
  SequenceManifest manifest = loadManifest(manifest_path);
  CHECK(manifest.frames.size() == 8);  // 4 stereo + 4 fisheye
  double last = -1.0;
  for (const auto& frame : manifest.frames) {
    CHECK(frame.timestamp >= last);
    last = frame.timestamp;
  }
  fs::remove_all(dir);
}
