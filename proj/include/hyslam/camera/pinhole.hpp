#pragma once

#include <Eigen/Core>

#include "hyslam/core/result.hpp"

namespace hyslam {

enum class ProjectionError {
  kBehindCamera,
  kOutsideFov,
  kNoConvergence,
};

// Ideal pinhole intrinsics for the rectified stereo pair (projection pi_m).
struct PinholeModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx > 0.0 && cx < width && cy > 0.0 &&
           cy < height;
  }

  Result<Eigen::Vector2d, ProjectionError> project(
      const Eigen::Vector3d& p_cam) const {
    if (p_cam.z() <= 0.0) return ProjectionError::kBehindCamera;
    const double inv_z = 1.0 / p_cam.z();
    return Eigen::Vector2d(fx * p_cam.x() * inv_z + cx,
                           fy * p_cam.y() * inv_z + cy);
  }

  bool inImage(const Eigen::Vector2d& pix, double margin = 0.0) const {
    return pix.x() >= margin && pix.x() <= width - 1 - margin &&
           pix.y() >= margin && pix.y() <= height - 1 - margin;
  }

  // Unit bearing ray with positive z for a pixel.
  Eigen::Vector3d unproject(const Eigen::Vector2d& pix) const {
    Eigen::Vector3d ray((pix.x() - cx) / fx, (pix.y() - cy) / fy, 1.0);
    return ray.normalized();
  }

  // d(pixel)/d(p_cam), valid for z > 0.
  Eigen::Matrix<double, 2, 3> projectionJacobian(
      const Eigen::Vector3d& p_cam) const {
    const double inv_z = 1.0 / p_cam.z();
    const double inv_z2 = inv_z * inv_z;
    Eigen::Matrix<double, 2, 3> j;
    j << fx * inv_z, 0.0, -fx * p_cam.x() * inv_z2,  //
        0.0, fy * inv_z, -fy * p_cam.y() * inv_z2;
    return j;
  }
};

}  // namespace hyslam
