#pragma once

#include <memory>

#include "hyslam/camera/fisheye.hpp"
#include "hyslam/camera/stereo_rig.hpp"

namespace hyslam {

enum class CameraKind { kStereo, kFisheye };

// Tagged union over the two frame camera types. Immutable after load.
struct Camera {
  CameraKind kind = CameraKind::kStereo;
  StereoRig rig;
  FisheyeModel fisheye;

  static Camera Stereo(const StereoRig& rig) {
    Camera c;
    c.kind = CameraKind::kStereo;
    c.rig = rig;
    return c;
  }

  static Camera Fisheye(const FisheyeModel& model) {
    Camera c;
    c.kind = CameraKind::kFisheye;
    c.fisheye = model;
    return c;
  }

  double focal() const {
    return kind == CameraKind::kStereo ? rig.left.fx : fisheye.fx;
  }

  int width() const {
    return kind == CameraKind::kStereo ? rig.left.width : fisheye.width;
  }
  int height() const {
    return kind == CameraKind::kStereo ? rig.left.height : fisheye.height;
  }

  // Monocular projection (left pinhole for stereo frames).
  Result<Eigen::Vector2d, ProjectionError> projectMono(
      const Eigen::Vector3d& p_cam) const {
    if (kind == CameraKind::kStereo) return rig.left.project(p_cam);
    return fisheye.project(p_cam);
  }

  bool inImage(const Eigen::Vector2d& pix, double margin = 0.0) const {
    if (kind == CameraKind::kStereo) return rig.left.inImage(pix, margin);
    return fisheye.inImage(pix, margin);
  }

  // Unit bearing for a pixel; fisheye unprojection can fail outside the
  // calibrated domain.
  Result<Eigen::Vector3d, ProjectionError> unproject(
      const Eigen::Vector2d& pix) const {
    if (kind == CameraKind::kStereo)
      return Result<Eigen::Vector3d, ProjectionError>(
          rig.left.unproject(pix));
    return fisheye.unproject(pix);
  }
};

using CameraPtr = std::shared_ptr<const Camera>;

}  // namespace hyslam
