#pragma once

#include <Eigen/Core>

#include "hyslam/camera/stereo_rig.hpp"
#include "hyslam/core/result.hpp"
#include "hyslam/geometry/pose.hpp"

namespace hyslam {

enum class TriangulationError {
  kDegenerateDisparity,
  kInsufficientParallax,
  kNegativeDepth,
};

// Depth from a rectified stereo observation, z = fx * b / (u_l - u_r).
// Returns the point in the left camera frame.
Result<Eigen::Vector3d, TriangulationError> triangulateStereo(
    double u_left, double v, double u_right, const StereoRig& rig,
    double min_disparity = 0.25);

// Midpoint of the common perpendicular between two bearing rays.
// pose_ab maps frame-b points into frame a; the result is in frame a.
// Rays must subtend more than `min_parallax_rad` and the point must have
// positive depth in both frames.
Result<Eigen::Vector3d, TriangulationError> triangulateTwoView(
    const Eigen::Vector3d& ray_a, const Eigen::Vector3d& ray_b,
    const Pose& pose_ab, double min_parallax_rad = 0.017453292519943295);

}  // namespace hyslam
