#pragma once

#include <Eigen/Core>

#include "hyslam/camera/pinhole.hpp"
#include "hyslam/core/result.hpp"

namespace hyslam {

// Rectified stereo pair: both images share the left intrinsics and are
// row-aligned. Projection pi_s maps a left-camera-frame point to
// (u_left, v, u_right) with u_right = u_left - fx * b / z.
struct StereoRig {
  PinholeModel left;
  double baseline = 0.0;  // meters

  bool valid() const { return left.valid() && baseline > 0.0; }

  Result<Eigen::Vector3d, ProjectionError> project(
      const Eigen::Vector3d& p_cam) const {
    auto mono = left.project(p_cam);
    if (!mono) return mono.error();
    const double disparity = left.fx * baseline / p_cam.z();
    return Eigen::Vector3d(mono.value().x(), mono.value().y(),
                           mono.value().x() - disparity);
  }

  // d(u_l, v, u_r)/d(p_cam).
  Eigen::Matrix3d projectionJacobian(const Eigen::Vector3d& p_cam) const {
    const double inv_z = 1.0 / p_cam.z();
    const double inv_z2 = inv_z * inv_z;
    Eigen::Matrix3d j;
    j.topRows<2>() = left.projectionJacobian(p_cam);
    j(2, 0) = left.fx * inv_z;
    j(2, 1) = 0.0;
    j(2, 2) = -left.fx * p_cam.x() * inv_z2 + left.fx * baseline * inv_z2;
    return j;
  }
};

}  // namespace hyslam
