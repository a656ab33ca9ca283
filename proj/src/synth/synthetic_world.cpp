#include "hyslam/synth/synthetic_world.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hyslam/io/calibration_io.hpp"
#include "hyslam/io/errors.hpp"
#include "hyslam/io/feature_io.hpp"
#include "hyslam/io/manifest.hpp"
#include "hyslam/io/trajectory_io.hpp"

namespace hyslam {

namespace {

// Rugose sea-floor height over the scene footprint, in [0, extent_z].
double surfaceHeight(double x, double y, double extent_z) {
  double h = 0.5 + 0.3 * std::sin(1.3 * x + 0.7) * std::sin(1.1 * y + 0.3) +
             0.15 * std::sin(2.9 * x + 1.9) * std::cos(3.1 * y + 0.5);
  return std::clamp(h, 0.0, 1.0) * extent_z;
}

// Camera-in-world rotation for a nadir view with heading `yaw` about the
// world z axis: optical axis points straight down.
Eigen::Matrix3d downLooking(double yaw) {
  Eigen::Matrix3d flip;
  flip << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() *
         flip;
}

Descriptor randomUnitDescriptor(std::mt19937& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Descriptor d;
  for (int i = 0; i < kDescriptorDim; ++i)
    d[i] = static_cast<float>(gauss(rng));
  d.normalize();
  return d;
}

void validate(const SceneSpec& spec) {
  auto require = [](bool ok, const char* why) {
    if (!ok) throw InvalidSpec(why);
  };
  require(spec.landmark_count > 0, "landmark_count must be positive");
  require(spec.frame_count > 0, "frame_count must be positive");
  require(spec.extent_x > 0 && spec.extent_y > 0 && spec.extent_z > 0,
          "extents must be positive");
  require(spec.frame_rate > 0, "frame_rate must be positive");
  require(spec.noise.pixel_sigma >= 0, "pixel_sigma must be non-negative");
  require(spec.noise.outlier_rate >= 0 && spec.noise.outlier_rate < 1,
          "outlier_rate must be in [0, 1)");
  require(spec.noise.descriptor_sigma >= 0,
          "descriptor_sigma must be non-negative");
  require(spec.spiral_radius > 0, "spiral_radius must be positive");
  require(spec.arm_radius > 0 && spec.arm_radius <= 1.3,
          "arm_radius must be in (0, 1.3]");
  require(spec.altitude > 0, "altitude must be positive");
  require(spec.descriptor_separation >= 0 && spec.descriptor_separation < 1.2,
          "descriptor_separation must be in [0, 1.2)");
}

}  // namespace

CameraPtr defaultStereoCamera() {
  StereoRig rig;
  rig.left = {450.0, 450.0, 360.0, 270.0, 720, 540};
  rig.baseline = 0.12;
  return std::make_shared<Camera>(Camera::Stereo(rig));
}

CameraPtr defaultFisheyeCamera() {
  FisheyeModel m;
  m.fx = 280.0;
  m.fy = 280.0;
  m.cx = 320.0;
  m.cy = 240.0;
  m.k1 = -0.01;
  m.k2 = 0.002;
  m.width = 640;
  m.height = 480;
  return std::make_shared<Camera>(Camera::Fisheye(m));
}

SyntheticWorld generateWorld(const SceneSpec& spec) {
  validate(spec);

  SyntheticWorld world;
  world.noise = spec.noise;
  world.seed = spec.seed;
  world.stereo_camera =
      spec.stereo_camera ? spec.stereo_camera : defaultStereoCamera();
  world.fisheye_camera =
      spec.fisheye_camera ? spec.fisheye_camera : defaultFisheyeCamera();

  std::mt19937 rng(spec.seed);
  std::uniform_real_distribution<double> ux(-spec.extent_x / 2,
                                            spec.extent_x / 2);
  std::uniform_real_distribution<double> uy(-spec.extent_y / 2,
                                            spec.extent_y / 2);
  std::uniform_real_distribution<double> jitter(-0.05 * spec.extent_z,
                                                0.05 * spec.extent_z);
  std::uniform_real_distribution<double> patch(0.02, 0.06);

  world.landmarks.reserve(spec.landmark_count);
  world.descriptors.reserve(spec.landmark_count);
  world.patch_sizes.reserve(spec.landmark_count);
  for (int i = 0; i < spec.landmark_count; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    const double z = std::clamp(
        surfaceHeight(x, y, spec.extent_z) + jitter(rng), 0.0, spec.extent_z);
    world.landmarks.emplace_back(x, y, z);
    world.patch_sizes.push_back(patch(rng));

    // Redraw until the new descriptor clears the separability floor.
    Descriptor d;
    bool separated = false;
    for (int attempt = 0; attempt < 200 && !separated; ++attempt) {
      d = randomUnitDescriptor(rng);
      separated = true;
      for (const Descriptor& other : world.descriptors) {
        if (descriptorDistance(d, other) < spec.descriptor_separation) {
          separated = false;
          break;
        }
      }
    }
    if (!separated)
      throw InvalidSpec("descriptor_separation unattainable for this count");
    world.descriptors.push_back(d);
  }

  const double z_cam = spec.extent_z + spec.altitude;
  const double dt = 1.0 / spec.frame_rate;
  const int n = spec.frame_count;

  auto pushPair = [&](int i, const Eigen::Vector3d& stereo_pos,
                      double stereo_yaw, const Eigen::Vector3d& fisheye_pos,
                      double fisheye_yaw) {
    world.stereo_trajectory.push(i * dt,
                                 Pose(downLooking(stereo_yaw), stereo_pos));
    world.fisheye_trajectory.push(i * dt + 0.5 * dt,
                                  Pose(downLooking(fisheye_yaw), fisheye_pos));
  };

  switch (spec.trajectory) {
    case TrajectoryKind::kSpiralSurvey: {
      // Spiral outward for 80% of the frames, then fly back to the start
      // so the sequence revisits its first viewpoint.
      const int out = std::max(1, static_cast<int>(std::lround(0.8 * n)));
      Eigen::Vector3d start(0.0, 0.0, z_cam);
      Eigen::Vector3d turn_point = start;
      for (int i = 0; i < n; ++i) {
        Eigen::Vector3d pos;
        double s;
        if (i < out) {
          s = out > 1 ? static_cast<double>(i) / (out - 1) : 0.0;
          const double r = 0.995 * spec.spiral_radius * s;
          const double a = 2.0 * M_PI * spec.spiral_turns * s;
          pos = start + Eigen::Vector3d(r * std::cos(a), r * std::sin(a), 0.0);
          turn_point = pos;
        } else {
          s = 1.0;
          const double back =
              static_cast<double>(i - out + 1) / (n - out);
          pos = turn_point + back * (start - turn_point);
        }
        const double yaw = 0.25 * std::sin(2.0 * M_PI * s);
        const Eigen::Vector3d offset(0.4 * std::cos(3.0 * M_PI * s),
                                     0.4 * std::sin(3.0 * M_PI * s), -0.3);
        pushPair(i, pos, yaw, pos + offset, yaw + 0.4 * std::sin(5.0 * s));
      }
      break;
    }
    case TrajectoryKind::kStaticVehicleArmSweep: {
      const Eigen::Vector3d vehicle(0.0, 0.0, z_cam);
      for (int i = 0; i < n; ++i) {
        const double s = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
        const double a = M_PI * (2.0 * s - 0.5);  // 360 degree sweep
        const Eigen::Vector3d arm(spec.arm_radius * std::cos(a),
                                  spec.arm_radius * std::sin(a),
                                  -0.15 * std::sin(4.0 * M_PI * s));
        pushPair(i, vehicle, 0.0, vehicle + arm, a + M_PI / 2);
      }
      break;
    }
    case TrajectoryKind::kStraightLine: {
      const double length = 0.8 * spec.extent_x;
      for (int i = 0; i < n; ++i) {
        const double s = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
        const Eigen::Vector3d pos(length * (s - 0.5), 0.0, z_cam);
        pushPair(i, pos, 0.0, pos + Eigen::Vector3d(0.0, 0.3, -0.2), 0.1);
      }
      break;
    }
  }
  return world;
}

FrameRender renderFrame(const SyntheticWorld& world, int frame_index,
                        CameraKind kind) {
  const Trajectory& trajectory = kind == CameraKind::kStereo
                                     ? world.stereo_trajectory
                                     : world.fisheye_trajectory;
  const Camera& camera = kind == CameraKind::kStereo ? *world.stereo_camera
                                                     : *world.fisheye_camera;
  if (frame_index < 0 ||
      frame_index >= static_cast<int>(trajectory.size()))
    throw std::out_of_range("renderFrame: frame index out of range");

  // Seeded per (world, frame, camera) so renders are order independent.
  std::seed_seq seq{world.seed, static_cast<std::uint32_t>(frame_index),
                    static_cast<std::uint32_t>(kind)};
  std::mt19937 rng(seq);
  std::normal_distribution<double> pixel_noise(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const Pose world_to_camera = trajectory.poses[frame_index].pose.inverse();
  const double margin = 1.0;

  FrameRender render;
  for (int j = 0; j < static_cast<int>(world.landmarks.size()); ++j) {
    const Eigen::Vector3d p_cam = world_to_camera * world.landmarks[j];

    Feature f;
    if (kind == CameraKind::kStereo) {
      if (p_cam.z() < 0.1) continue;
      auto projected = camera.rig.project(p_cam);
      if (!projected) continue;
      const Eigen::Vector3d& uvr = projected.value();
      if (!camera.inImage({uvr.x(), uvr.y()}, margin)) continue;
      if (uvr.z() < margin) continue;  // right view must see it too
      f.u = uvr.x();
      f.v = uvr.y();
      f.right_u = uvr.z();
    } else {
      auto projected = camera.fisheye.project(p_cam);
      if (!projected) continue;
      if (!camera.inImage(projected.value(), margin)) continue;
      f.u = projected.value().x();
      f.v = projected.value().y();
      f.right_u = -1.0;
    }

    const double distance = p_cam.norm();
    f.scale_sigma = camera.focal() * world.patch_sizes[j] / distance;
    f.orientation = 2.0 * M_PI * uniform(rng);

    if (world.noise.pixel_sigma > 0.0) {
      f.u += world.noise.pixel_sigma * pixel_noise(rng);
      f.v += world.noise.pixel_sigma * pixel_noise(rng);
      if (f.right_u >= 0.0)
        f.right_u += world.noise.pixel_sigma * pixel_noise(rng);
    }

    f.descriptor = world.descriptors[j];
    if (world.noise.descriptor_sigma > 0.0) {
      std::normal_distribution<double> dn(0.0, world.noise.descriptor_sigma);
      for (int k = 0; k < kDescriptorDim; ++k)
        f.descriptor[k] += static_cast<float>(dn(rng));
      f.descriptor.normalize();
    }

    int label = j;
    if (world.noise.outlier_rate > 0.0 &&
        uniform(rng) < world.noise.outlier_rate) {
      // Replace with a spurious detection that matches nothing.
      f.u = margin + uniform(rng) * (camera.width() - 1 - 2 * margin);
      f.v = margin + uniform(rng) * (camera.height() - 1 - 2 * margin);
      if (kind == CameraKind::kStereo)
        f.right_u = f.u - (0.5 + 50.0 * uniform(rng));
      f.descriptor = randomUnitDescriptor(rng);
      label = -1;
    }

    render.features.push_back(f);
    render.landmark_of_feature.push_back(label);
  }
  return render;
}

SceneSpec parseSceneSpec(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;

    std::string value;
    if (!(fields >> value))
      throw ParseError("scene spec line " + std::to_string(line_number) +
                       ": missing value for " + key);
    auto number = [&]() {
      try {
        return std::stod(value);
      } catch (const std::exception&) {
        throw ParseError("scene spec line " + std::to_string(line_number) +
                         ": bad number '" + value + "'");
      }
    };

    if (key == "trajectory") {
      if (value == "spiral_survey")
        spec.trajectory = TrajectoryKind::kSpiralSurvey;
      else if (value == "static_vehicle_arm_sweep")
        spec.trajectory = TrajectoryKind::kStaticVehicleArmSweep;
      else if (value == "straight_line")
        spec.trajectory = TrajectoryKind::kStraightLine;
      else
        throw InvalidSpec("unknown trajectory '" + value + "'");
    } else if (key == "landmark_count") {
      spec.landmark_count = static_cast<int>(number());
    } else if (key == "extent_x") {
      spec.extent_x = number();
    } else if (key == "extent_y") {
      spec.extent_y = number();
    } else if (key == "extent_z") {
      spec.extent_z = number();
    } else if (key == "frame_count") {
      spec.frame_count = static_cast<int>(number());
    } else if (key == "frame_rate") {
      spec.frame_rate = number();
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint32_t>(number());
    } else if (key == "pixel_sigma") {
      spec.noise.pixel_sigma = number();
    } else if (key == "outlier_rate") {
      spec.noise.outlier_rate = number();
    } else if (key == "descriptor_sigma") {
      spec.noise.descriptor_sigma = number();
    } else if (key == "descriptor_separation") {
      spec.descriptor_separation = number();
    } else if (key == "spiral_radius") {
      spec.spiral_radius = number();
    } else if (key == "spiral_turns") {
      spec.spiral_turns = number();
    } else if (key == "altitude") {
      spec.altitude = number();
    } else if (key == "arm_radius") {
      spec.arm_radius = number();
    } else {
      throw ParseError("scene spec line " + std::to_string(line_number) +
                       ": unknown key '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

SceneSpec loadSceneSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene spec: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseSceneSpec(buffer.str());
}

std::string exportSequence(const SyntheticWorld& world,
                           const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(directory) / "features");

  SequenceManifest manifest;
  manifest.stereo_calibration_path = "calib_stereo.txt";
  manifest.fisheye_calibration_path = "calib_fisheye.txt";
  manifest.ground_truth_stereo_path = "ground_truth_stereo.txt";
  manifest.ground_truth_fisheye_path = "ground_truth_fisheye.txt";

  const fs::path root(directory);
  saveCalibration(*world.stereo_camera,
                  (root / manifest.stereo_calibration_path).string());
  saveCalibration(*world.fisheye_camera,
                  (root / manifest.fisheye_calibration_path).string());
  writeTrajectory(world.stereo_trajectory,
                  (root / manifest.ground_truth_stereo_path).string());
  writeTrajectory(world.fisheye_trajectory,
                  (root / manifest.ground_truth_fisheye_path).string());

  auto addFrames = [&](CameraKind kind, const Trajectory& trajectory,
                       const std::string& prefix) {
    for (int i = 0; i < static_cast<int>(trajectory.size()); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "features/%s_%05d.bin",
                    prefix.c_str(), i);
      const FrameRender render = renderFrame(world, i, kind);
      saveFeatures(render.features, (root / name).string());
      manifest.frames.push_back(
          {trajectory.poses[i].timestamp, kind, name});
    }
  };
  addFrames(CameraKind::kStereo, world.stereo_trajectory, "stereo");
  addFrames(CameraKind::kFisheye, world.fisheye_trajectory, "fisheye");
  std::sort(manifest.frames.begin(), manifest.frames.end(),
            [](const FrameRecord& a, const FrameRecord& b) {
              return a.timestamp < b.timestamp;
            });

  const std::string manifest_path = (root / "manifest.txt").string();
  saveManifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace hyslam
