#pragma once

#include <vector>

#include "hyslam/camera/camera.hpp"
#include "hyslam/core/result.hpp"
#include "hyslam/features/feature.hpp"
#include "hyslam/geometry/relative_pose.hpp"
#include "hyslam/geometry/trajectory.hpp"

namespace hyslam {

enum class EvalError {
  kTooFewAssociations,
  kNoRegisteredPairs,
  kEmptyErrors,
};

// Absolute trajectory error after rigid (no-scale) alignment.
struct AteReport {
  double rmse = 0.0;    // meters
  double mean = 0.0;
  double median = 0.0;
  double max_error = 0.0;
  std::size_t pair_count = 0;
  Pose alignment;  // maps estimate positions onto the reference
};

Result<AteReport, EvalError> ateRmse(const Trajectory& estimate,
                                     const Trajectory& reference,
                                     double association_tolerance = 0.01);

// Relative stereo-to-fisheye pose error over synchronized hybrid pairs.
// Only pairs where both cameras carry an estimate are scored; the
// registered count reports that coverage.
struct HybridPoseReport {
  std::vector<double> translation_errors_cm;
  std::vector<double> rotation_errors_deg;
  double mean_translation_cm = 0.0;
  double median_translation_cm = 0.0;
  double mean_rotation_deg = 0.0;
  double median_rotation_deg = 0.0;
  int registered_pairs = 0;
  int total_pairs = 0;
};

Result<HybridPoseReport, EvalError> hybridPoseError(
    const Trajectory& estimate_stereo, const Trajectory& estimate_fisheye,
    const Trajectory& truth_stereo, const Trajectory& truth_fisheye,
    double sync_tolerance);

// Area under the fraction-below-threshold curve over [0, max_angle_deg],
// trapezoidal integration on a one-degree grid, normalized to [0, 1].
Result<double, EvalError> aucCurve(const std::vector<double>& errors_deg,
                                   double max_angle_deg);

// One synchronized stereo-left / fisheye image pair with its ground-truth
// relative transform (stereo-camera frame into fisheye-camera frame).
struct FeatureEvalPair {
  std::vector<Feature> stereo_features;
  std::vector<Feature> fisheye_features;
  Pose truth_stereo_to_fisheye;
};

struct AucReport {
  double auc_rot = 0.0;
  double auc_trans = 0.0;
  double mean_inlier_matches = 0.0;
  int pairs_evaluated = 0;
  int pairs_no_consensus = 0;
  // Pairs with (near) zero ground-truth baseline: the translation
  // direction is undefined, so they are excluded from AUC_trans.
  int pairs_zero_baseline = 0;
};

// The cross-camera feature-matching harness: ratio-tested brute-force
// matching, bearing conversion through each camera model, robust relative
// pose, and per-pair angular errors against ground truth. Pairs without
// consensus score the maximum angle rather than being dropped.
Result<AucReport, EvalError> runFeatureEval(
    const std::vector<FeatureEvalPair>& pairs, const Camera& stereo_camera,
    const Camera& fisheye_camera, double ratio = 0.8,
    const RansacConfig& ransac = {}, double max_angle_deg = 180.0);

}  // namespace hyslam
