#pragma once

#include <string>

#include "hyslam/camera/camera.hpp"

namespace hyslam {

// Key-value calibration document. Exact keys:
//   camera_kind   pinhole_stereo | kannala_brandt
//   fx fy cx cy   pixels
//   width height  pixels
//   baseline      meters (stereo only)
//   k1 k2 k3 k4   distortion (fisheye only)
//   theta_max_deg optional fisheye FOV limit, clamped to the monotone
//                 range of d(theta)
// Lines are "key value"; '#' starts a comment.
// Throws ParseError / InvalidCalibration.
Camera loadCalibration(const std::string& path);
Camera parseCalibration(const std::string& text);

void saveCalibration(const Camera& camera, const std::string& path);

}  // namespace hyslam
