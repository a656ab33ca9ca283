#pragma once

#include <cmath>

#include <Eigen/Core>

#include "hyslam/camera/pinhole.hpp"
#include "hyslam/core/result.hpp"

namespace hyslam {

// Kannala-Brandt fisheye model (projection pi_f). The incidence angle
// theta = atan2(sqrt(x^2+y^2), z) is mapped through the odd polynomial
// d(theta) = theta + k1 theta^3 + k2 theta^5 + k3 theta^7 + k4 theta^9.
struct FisheyeModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  int width = 0;
  int height = 0;
  double theta_max = 95.0 * M_PI / 180.0;  // radians

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && theta_max > 0.0 && theta_max < M_PI;
  }

  double distort(double theta) const {
    const double t2 = theta * theta;
    return theta * (1.0 + t2 * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4))));
  }

  double distortDerivative(double theta) const {
    const double t2 = theta * theta;
    return 1.0 + t2 * (3.0 * k1 +
                       t2 * (5.0 * k2 + t2 * (7.0 * k3 + t2 * 9.0 * k4)));
  }

  // d(theta) must be strictly increasing up to theta_max for the Newton
  // unprojection to be well defined; checked by sampling.
  bool distortionMonotone(int samples = 256) const {
    double prev = 0.0;
    for (int i = 1; i <= samples; ++i) {
      const double theta = theta_max * static_cast<double>(i) / samples;
      const double d = distort(theta);
      if (d <= prev || distortDerivative(theta) <= 0.0) return false;
      prev = d;
    }
    return true;
  }

  Result<Eigen::Vector2d, ProjectionError> project(
      const Eigen::Vector3d& p_cam) const {
    const double r = std::sqrt(p_cam.x() * p_cam.x() + p_cam.y() * p_cam.y());
    const double theta = std::atan2(r, p_cam.z());
    if (theta > theta_max) return ProjectionError::kOutsideFov;
    if (r < 1e-12) return Eigen::Vector2d(cx, cy);
    const double d = distort(theta);
    return Eigen::Vector2d(fx * d * p_cam.x() / r + cx,
                           fy * d * p_cam.y() / r + cy);
  }

  bool inImage(const Eigen::Vector2d& pix, double margin = 0.0) const {
    return pix.x() >= margin && pix.x() <= width - 1 - margin &&
           pix.y() >= margin && pix.y() <= height - 1 - margin;
  }

  // Inverts d(theta) = r_norm by Newton iteration and returns the unit
  // bearing. Fails when the radius lies beyond d(theta_max).
  Result<Eigen::Vector3d, ProjectionError> unproject(
      const Eigen::Vector2d& pix, int max_iterations = 20,
      double tolerance = 1e-12) const {
    const double mx = (pix.x() - cx) / fx;
    const double my = (pix.y() - cy) / fy;
    const double r = std::sqrt(mx * mx + my * my);
    if (r < 1e-12) return Eigen::Vector3d(0.0, 0.0, 1.0);
    if (r > distort(theta_max) * (1.0 + 1e-9))
      return ProjectionError::kNoConvergence;
    double theta = std::min(r, theta_max);
    bool converged = false;
    for (int i = 0; i < max_iterations; ++i) {
      const double f = distort(theta) - r;
      const double step = f / distortDerivative(theta);
      theta -= step;
      if (theta < 0.0) theta = 0.0;
      if (theta > theta_max) theta = theta_max;
      if (std::abs(step) < tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) return ProjectionError::kNoConvergence;
    const double s = std::sin(theta);
    return Eigen::Vector3d(s * mx / r, s * my / r, std::cos(theta));
  }

  // d(pixel)/d(p_cam); valid away from the optical axis.
  Eigen::Matrix<double, 2, 3> projectionJacobian(
      const Eigen::Vector3d& p_cam) const {
    const double x = p_cam.x(), y = p_cam.y(), z = p_cam.z();
    const double r2 = x * x + y * y;
    const double r = std::sqrt(r2);
    const double rho2 = r2 + z * z;
    const double theta = std::atan2(r, z);
    const double d = distort(theta);
    const double dd = distortDerivative(theta);
    // dtheta/dp
    const Eigen::Vector3d dtheta(z * x / (r * rho2), z * y / (r * rho2),
                                 -r / rho2);
    // d(x/r)/dp and d(y/r)/dp
    const double inv_r3 = 1.0 / (r2 * r);
    const Eigen::Vector3d dxr(y * y * inv_r3, -x * y * inv_r3, 0.0);
    const Eigen::Vector3d dyr(-x * y * inv_r3, x * x * inv_r3, 0.0);
    Eigen::Matrix<double, 2, 3> j;
    j.row(0) = fx * (dd * (x / r) * dtheta + d * dxr).transpose();
    j.row(1) = fy * (dd * (y / r) * dtheta + d * dyr).transpose();
    return j;
  }
};

}  // namespace hyslam
