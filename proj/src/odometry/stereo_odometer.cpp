#include "hyslam/odometry/stereo_odometer.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "hyslam/features/matching.hpp"
#include "hyslam/geometry/triangulation.hpp"

namespace hyslam {

namespace {

// Squared pixel errors of one track under motion `T` (prev -> cur):
// the larger of the left and right image errors decides inlier status.
bool reprojectionError(const OdometryTrack& track, const StereoRig& rig,
                       const Pose& motion, double* left_sq, double* right_sq) {
  const Eigen::Vector3d p = motion * track.point_prev;
  auto projected = rig.project(p);
  if (!projected) return false;
  const Eigen::Vector3d d = track.observed_cur - projected.value();
  *left_sq = d.x() * d.x() + d.y() * d.y();
  *right_sq = d.z() * d.z() + d.y() * d.y();
  return true;
}

// Gauss-Newton on the 6-DoF motion minimizing the stereo reprojection of
// the selected tracks. Returns false when the normal equations degenerate.
bool refineMotion(const std::vector<OdometryTrack>& tracks,
                  const std::vector<int>& selection, const StereoRig& rig,
                  const OdometryConfig& config, Pose* motion) {
  Pose T = *motion;
  for (int it = 0; it < config.gn_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    int used = 0;
    for (int index : selection) {
      const OdometryTrack& track = tracks[index];
      const Eigen::Vector3d p = T * track.point_prev;
      auto projected = rig.project(p);
      if (!projected) continue;
      const Eigen::Vector3d r = track.observed_cur - projected.value();
      Eigen::Matrix<double, 3, 6> dp;  // d(T x) / d delta, left retraction
      dp << 0, p.z(), -p.y(), 1, 0, 0,  //
          -p.z(), 0, p.x(), 0, 1, 0,    //
          p.y(), -p.x(), 0, 0, 0, 1;
      const Eigen::Matrix<double, 3, 6> J = -rig.projectionJacobian(p) * dp;
      H += J.transpose() * J;
      g -= J.transpose() * r;
      ++used;
    }
    if (used < 3) return false;
    const Eigen::Matrix<double, 6, 1> delta = H.ldlt().solve(g);
    if (!delta.allFinite()) return false;
    T = T.retract(delta);
    if (delta.norm() < config.step_tolerance) break;
  }
  *motion = T;
  return true;
}

std::vector<int> classifyInliers(const std::vector<OdometryTrack>& tracks,
                                 const StereoRig& rig, const Pose& motion,
                                 double threshold_px) {
  const double t2 = threshold_px * threshold_px;
  std::vector<int> inliers;
  for (int i = 0; i < static_cast<int>(tracks.size()); ++i) {
    double left_sq = 0.0, right_sq = 0.0;
    if (reprojectionError(tracks[i], rig, motion, &left_sq, &right_sq) &&
        left_sq <= t2 && right_sq <= t2)
      inliers.push_back(i);
  }
  return inliers;
}

}  // namespace

std::vector<OdometryTrack> trackCircular(
    const std::vector<Feature>& prev_frame,
    const std::vector<Feature>& cur_frame, const StereoRig& rig,
    const OdometryConfig& config) {
  // Rebuild right-image feature lists from the inline stereo matches.
  auto rightView = [](const std::vector<Feature>& frame,
                      std::vector<int>* to_frame) {
    std::vector<Feature> right;
    for (int i = 0; i < static_cast<int>(frame.size()); ++i) {
      if (frame[i].right_u < 0.0) continue;
      Feature f = frame[i];
      f.u = f.right_u;
      right.push_back(f);
      to_frame->push_back(i);
    }
    return right;
  };
  std::vector<int> prev_right_map, cur_right_map;
  const std::vector<Feature> prev_right = rightView(prev_frame, &prev_right_map);
  const std::vector<Feature> cur_right = rightView(cur_frame, &cur_right_map);

  const auto cycles =
      matchCircular(prev_frame, prev_right, cur_right, cur_frame,
                    config.epipolar_tolerance, config.max_descriptor_distance);

  std::vector<OdometryTrack> tracks;
  tracks.reserve(cycles.size());
  for (const CircularTrack& cycle : cycles) {
    const Feature& prev = prev_frame[cycle.prev_left];
    const Feature& cur = cur_frame[cycle.cur_left];
    if (cur.right_u < 0.0) continue;
    auto point = triangulateStereo(prev.u, prev.v, prev.right_u, rig);
    if (!point) continue;
    OdometryTrack track;
    track.prev_index = cycle.prev_left;
    track.cur_index = cycle.cur_left;
    track.point_prev = point.value();
    track.observed_cur = Eigen::Vector3d(cur.u, cur.v, cur.right_u);
    tracks.push_back(track);
  }
  return tracks;
}

Result<OdometryResult, OdometryError> estimateEgoMotion(
    const std::vector<OdometryTrack>& tracks, const StereoRig& rig,
    const OdometryConfig& config) {
  const int n = static_cast<int>(tracks.size());
  if (n < config.min_inliers) return OdometryError::kInsufficientTracks;

  std::mt19937 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  Pose best_motion;
  std::vector<int> best_inliers;
  for (int it = 0; it < config.ransac_iterations; ++it) {
    int a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;

    Pose motion;  // identity start: frame-rate motion is small
    if (!refineMotion(tracks, {a, b, c}, rig, config, &motion)) continue;
    std::vector<int> inliers =
        classifyInliers(tracks, rig, motion, config.inlier_threshold_px);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_motion = motion;
      if (static_cast<double>(best_inliers.size()) >=
          config.early_exit_ratio * n)
        break;
    }
  }
  if (static_cast<int>(best_inliers.size()) < config.min_inliers)
    return OdometryError::kNoConsensus;

  // Alternate consensus refinement and reclassification until the inlier
  // set stabilizes; a single pass would keep the selection bias of the
  // rough minimal-sample motion.
  for (int round = 0; round < 5; ++round) {
    Pose motion = best_motion;
    if (!refineMotion(tracks, best_inliers, rig, config, &motion)) break;
    std::vector<int> refined =
        classifyInliers(tracks, rig, motion, config.inlier_threshold_px);
    if (static_cast<int>(refined.size()) < config.min_inliers) break;
    const bool stable = refined == best_inliers;
    best_inliers = std::move(refined);
    best_motion = motion;
    if (stable) break;
  }

  OdometryResult result;
  result.motion = best_motion;
  result.inliers = best_inliers;
  double sum = 0.0;
  for (int index : best_inliers) {
    double left_sq = 0.0, right_sq = 0.0;
    reprojectionError(tracks[index], rig, best_motion, &left_sq, &right_sq);
    sum += std::sqrt(0.5 * (left_sq + right_sq));
  }
  result.mean_reprojection_error =
      best_inliers.empty() ? 0.0 : sum / best_inliers.size();
  return result;
}

}  // namespace hyslam
