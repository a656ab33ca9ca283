#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyslam/camera/camera.hpp"
#include "hyslam/features/feature.hpp"
#include "hyslam/geometry/trajectory.hpp"

namespace hyslam {

struct InvalidSpec : std::runtime_error {
  explicit InvalidSpec(const std::string& why)
      : std::runtime_error("invalid scene spec: " + why) {}
};

struct NoiseModel {
  double pixel_sigma = 0.0;
  double outlier_rate = 0.0;
  double descriptor_sigma = 0.0;
};

enum class TrajectoryKind {
  kSpiralSurvey,           // vehicle spirals over the surface, then revisits
  kStaticVehicleArmSweep,  // stereo parked, fisheye swept on a short arm
  kStraightLine,
};

// Parameters for a generated scene. Defaults describe a 10 x 10 m rugose
// surface with 2 m of relief, surveyed from 4 m altitude.
struct SceneSpec {
  int landmark_count = 5000;
  double extent_x = 10.0;
  double extent_y = 10.0;
  double extent_z = 2.0;
  TrajectoryKind trajectory = TrajectoryKind::kSpiralSurvey;
  int frame_count = 60;
  double frame_rate = 10.0;  // Hz
  std::uint32_t seed = 1;
  NoiseModel noise;
  // Landmark descriptors are redrawn until every pair is at least this far
  // apart, so the ground-truth match is unambiguous.
  double descriptor_separation = 0.5;
  double spiral_radius = 4.0;
  double spiral_turns = 2.0;
  double altitude = 4.0;  // camera height above the surface crest
  double arm_radius = 1.0;
  CameraPtr stereo_camera;   // defaulted when null
  CameraPtr fisheye_camera;  // defaulted when null
};

// Ground-truth scene: landmark cloud plus the two camera trajectories.
// Everything downstream ([DERIVED]-style expectations, end-to-end runs) is
// computed from this by exact projection and exhaustive search.
struct SyntheticWorld {
  std::vector<Eigen::Vector3d> landmarks;
  std::vector<Descriptor> descriptors;   // unit, well separated
  std::vector<double> patch_sizes;       // physical feature size, meters
  Trajectory stereo_trajectory;          // camera-in-world
  Trajectory fisheye_trajectory;         // camera-in-world
  CameraPtr stereo_camera;
  CameraPtr fisheye_camera;
  NoiseModel noise;
  std::uint32_t seed = 1;
};

// One rendered frame with per-feature provenance: landmark index, or -1
// for an injected outlier.
struct FrameRender {
  std::vector<Feature> features;
  std::vector<int> landmark_of_feature;
};

// Deterministic in the spec (seed included). Throws InvalidSpec.
SyntheticWorld generateWorld(const SceneSpec& spec);

// Projects all landmarks through the exact camera model for the requested
// frame, applies the noise model, and labels every feature. Pure and
// deterministic for a given (world, frame, kind).
FrameRender renderFrame(const SyntheticWorld& world, int frame_index,
                        CameraKind kind);

// Key-value scene document, one `key value` pair per line, '#' comments.
SceneSpec parseSceneSpec(const std::string& text);
SceneSpec loadSceneSpec(const std::string& path);

// Renders the whole sequence into `directory`: calibration files, ground
// truth trajectories, per-frame feature files, and a sequence manifest the
// dataset loaders accept. Returns the manifest path.
std::string exportSequence(const SyntheticWorld& world,
                           const std::string& directory);

// Built-in camera models used when a spec does not name its own.
CameraPtr defaultStereoCamera();
CameraPtr defaultFisheyeCamera();

}  // namespace hyslam
