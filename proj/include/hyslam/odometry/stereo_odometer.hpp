#pragma once

#include <vector>

#include "hyslam/camera/stereo_rig.hpp"
#include "hyslam/core/result.hpp"
#include "hyslam/features/feature.hpp"
#include "hyslam/geometry/pose.hpp"

namespace hyslam {

// One circularly filtered inter-frame track with the previous-frame
// landmark already triangulated.
struct OdometryTrack {
  int prev_index = -1;  // into the previous frame's feature list
  int cur_index = -1;   // into the current frame's feature list
  Eigen::Vector3d point_prev = Eigen::Vector3d::Zero();  // prev-left frame
  Eigen::Vector3d observed_cur = Eigen::Vector3d::Zero();  // (u_l, v, u_r)
};

enum class OdometryError {
  kInsufficientTracks,
  kNoConsensus,
};

struct OdometryConfig {
  int ransac_iterations = 200;
  double inlier_threshold_px = 1.5;
  double early_exit_ratio = 0.8;
  int min_inliers = 6;
  int gn_iterations = 20;
  double step_tolerance = 1e-9;
  double epipolar_tolerance = 1.0;  // px, circular-filter stereo gate
  double max_descriptor_distance = 1.1;  // circular-filter appearance gate
  std::uint32_t seed = 42;
};

struct OdometryResult {
  Pose motion;  // previous-to-current camera transform
  std::vector<int> inliers;  // indices into the track list
  double mean_reprojection_error = 0.0;  // px, over inliers
};

// Brute-force matches around the prev-left -> prev-right -> cur-right ->
// cur-left cycle (right-image features are reconstructed from right_u),
// keeps tracks that return to their starting feature, and triangulates
// the previous-frame observation. Tracks with degenerate disparity are
// dropped.
std::vector<OdometryTrack> trackCircular(
    const std::vector<Feature>& prev_frame,
    const std::vector<Feature>& cur_frame, const StereoRig& rig,
    const OdometryConfig& config = {});

// RANSAC over 3-track minimal samples, Gauss-Newton on the stereo
// reprojection of previous-frame points into the current left and right
// images, then a final refinement over the consensus set.
Result<OdometryResult, OdometryError> estimateEgoMotion(
    const std::vector<OdometryTrack>& tracks, const StereoRig& rig,
    const OdometryConfig& config = {});

}  // namespace hyslam
