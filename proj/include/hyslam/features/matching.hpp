#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hyslam/features/feature.hpp"

namespace hyslam {

struct BruteForceOptions {
  // Lowe ratio between best and second-best distance; 1.0 disables it.
  double ratio = 0.8;
  // Keep a pair only if it is also the best match in the reverse direction.
  bool mutual_check = false;
  // When >= 0, restrict candidates to |v_a - v_b| <= row_tolerance
  // (rectified stereo epipolar gate).
  double row_tolerance = -1.0;
};

// Exhaustive nearest-neighbor descriptor matching from list a into list b.
std::vector<MatchPair> matchBruteForce(const std::vector<Feature>& a,
                                       const std::vector<Feature>& b,
                                       const BruteForceOptions& options = {});

// Indices into (prev_left, prev_right, cur_right, cur_left) of one
// surviving circular track.
struct CircularTrack {
  int prev_left = -1;
  int prev_right = -1;
  int cur_right = -1;
  int cur_left = -1;
};

// Brute-force matching around the cycle prev_left -> prev_right ->
// cur_right -> cur_left -> prev_left; a track survives only when the
// closing match returns to the starting feature. Both stereo pairs are
// filtered by the rectified epipolar constraint.
std::vector<CircularTrack> matchCircular(const std::vector<Feature>& prev_left,
                                         const std::vector<Feature>& prev_right,
                                         const std::vector<Feature>& cur_right,
                                         const std::vector<Feature>& cur_left,
                                         double epipolar_tolerance = 1.0,
                                         double max_distance = 1.1);

struct ProjectedPoint {
  Eigen::Vector2d pixel;
  Descriptor descriptor;
  // Predicted normalized scale (sigma / focal) at the current distance;
  // <= 0 disables the scale gate for this point.
  double predicted_scale_norm = -1.0;
};

struct WindowMatchOptions {
  double radius = 15.0;  // pixels, at base scale
  double ratio = 0.9;
  double focal = 0.0;  // frame focal length for scale normalization
  double max_level_gap = 1.5;  // in log_1.2 units
  // Absolute descriptor-distance gate; unrelated unit descriptors sit near
  // sqrt(2), so this rejects single-candidate windows with no real match.
  double max_distance = 1.1;
};

// For each projected map point, the best-descriptor frame feature within
// the search window, ratio-tested against the second candidate in the
// window. Result index_a refers to the projected-point list, index_b to
// the frame features.
std::vector<MatchPair> matchProjectionWindow(
    const std::vector<ProjectedPoint>& projected,
    const std::vector<Feature>& features, const WindowMatchOptions& options);

}  // namespace hyslam
