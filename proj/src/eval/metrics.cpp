#include "hyslam/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hyslam/features/matching.hpp"
#include "hyslam/geometry/horn.hpp"

namespace hyslam {

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lower =
        *std::max_element(values.begin(), values.begin() + mid);
    m = 0.5 * (m + lower);
  }
  return m;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

constexpr double kRadToDeg = 180.0 / M_PI;

}  // namespace

Result<AteReport, EvalError> ateRmse(const Trajectory& estimate,
                                     const Trajectory& reference,
                                     double association_tolerance) {
  auto alignment = hornAlign(estimate, reference, association_tolerance);
  if (!alignment.ok() || alignment.value().pair_count < 3)
    return EvalError::kTooFewAssociations;

  AteReport report;
  report.alignment = alignment.value().transform;
  report.pair_count = alignment.value().pair_count;
  double sum_sq = 0.0;
  for (double r : alignment.value().residuals) {
    sum_sq += r * r;
    report.max_error = std::max(report.max_error, r);
  }
  report.rmse = std::sqrt(sum_sq / static_cast<double>(report.pair_count));
  report.mean = mean(alignment.value().residuals);
  report.median = median(alignment.value().residuals);
  return report;
}

Result<HybridPoseReport, EvalError> hybridPoseError(
    const Trajectory& estimate_stereo, const Trajectory& estimate_fisheye,
    const Trajectory& truth_stereo, const Trajectory& truth_fisheye,
    double sync_tolerance) {
  HybridPoseReport report;

  // Ground truth defines the synchronized hybrid pairs.
  const auto truth_pairs =
      associateByTimestamp(truth_fisheye, truth_stereo, sync_tolerance);
  report.total_pairs = static_cast<int>(truth_pairs.size());

  // Estimates for each side, associated by timestamp.
  const auto est_f = associateByTimestamp(estimate_fisheye, truth_fisheye,
                                          0.5 * sync_tolerance);
  const auto est_s = associateByTimestamp(estimate_stereo, truth_stereo,
                                          0.5 * sync_tolerance);
  std::map<std::size_t, std::size_t> est_of_truth_f, est_of_truth_s;
  for (const auto& [e, t] : est_f) est_of_truth_f[t] = e;
  for (const auto& [e, t] : est_s) est_of_truth_s[t] = e;

  for (const auto& [fisheye_index, stereo_index] : truth_pairs) {
    auto fe = est_of_truth_f.find(fisheye_index);
    auto se = est_of_truth_s.find(stereo_index);
    if (fe == est_of_truth_f.end() || se == est_of_truth_s.end()) continue;
    ++report.registered_pairs;

    // Camera-in-world poses; relative = stereo frame into fisheye frame.
    auto relative = [](const Pose& fisheye_in_world,
                       const Pose& stereo_in_world) {
      return fisheye_in_world.inverse().compose(stereo_in_world);
    };
    const Pose est = relative(estimate_fisheye.poses[fe->second].pose,
                              estimate_stereo.poses[se->second].pose);
    const Pose truth = relative(truth_fisheye.poses[fisheye_index].pose,
                                truth_stereo.poses[stereo_index].pose);
    const Pose delta = est.compose(truth.inverse());
    report.translation_errors_cm.push_back(delta.translation().norm() * 100.0);
    report.rotation_errors_deg.push_back(est.rotationAngleTo(truth) *
                                         kRadToDeg);
  }
  if (report.registered_pairs == 0) return EvalError::kNoRegisteredPairs;

  report.mean_translation_cm = mean(report.translation_errors_cm);
  report.median_translation_cm = median(report.translation_errors_cm);
  report.mean_rotation_deg = mean(report.rotation_errors_deg);
  report.median_rotation_deg = median(report.rotation_errors_deg);
  return report;
}

Result<double, EvalError> aucCurve(const std::vector<double>& errors_deg,
                                   double max_angle_deg) {
  if (errors_deg.empty() || max_angle_deg <= 0.0)
    return EvalError::kEmptyErrors;
  const int steps = std::max(1, static_cast<int>(std::ceil(max_angle_deg)));
  const double n = static_cast<double>(errors_deg.size());

  auto fractionBelow = [&](double threshold) {
    int count = 0;
    for (double e : errors_deg)
      if (e <= threshold) ++count;
    return static_cast<double>(count) / n;
  };

  double area = 0.0;
  double previous = fractionBelow(0.0);
  for (int i = 1; i <= steps; ++i) {
    const double threshold =
        std::min(max_angle_deg, static_cast<double>(i));
    const double current = fractionBelow(threshold);
    const double width = threshold - std::min(max_angle_deg,
                                              static_cast<double>(i - 1));
    area += 0.5 * (previous + current) * width;
    previous = current;
  }
  return area / max_angle_deg;
}

Result<AucReport, EvalError> runFeatureEval(
    const std::vector<FeatureEvalPair>& pairs, const Camera& stereo_camera,
    const Camera& fisheye_camera, double ratio, const RansacConfig& ransac,
    double max_angle_deg) {
  if (pairs.empty()) return EvalError::kEmptyErrors;

  AucReport report;
  std::vector<double> rotation_errors;
  std::vector<double> translation_errors;
  double inlier_sum = 0.0;

  for (const FeatureEvalPair& pair : pairs) {
    const Eigen::Vector3d truth_direction = pair.truth_stereo_to_fisheye.translation();
    const bool zero_baseline = truth_direction.norm() < 1e-3;

    BruteForceOptions options;
    options.ratio = ratio;
    options.mutual_check = true;
    const auto matches =
        matchBruteForce(pair.stereo_features, pair.fisheye_features, options);

    std::vector<BearingCorrespondence> correspondences;
    for (const MatchPair& match : matches) {
      const Feature& fs = pair.stereo_features[match.index_a];
      const Feature& ff = pair.fisheye_features[match.index_b];
      auto ray_a = stereo_camera.unproject(Eigen::Vector2d(fs.u, fs.v));
      auto ray_b = fisheye_camera.unproject(Eigen::Vector2d(ff.u, ff.v));
      if (!ray_a.ok() || !ray_b.ok()) continue;
      correspondences.push_back({ray_a.value(), ray_b.value()});
    }

    auto result = estimateRelativePoseRansac(correspondences, ransac);
    ++report.pairs_evaluated;
    if (zero_baseline) ++report.pairs_zero_baseline;

    if (!result.ok()) {
      ++report.pairs_no_consensus;
      rotation_errors.push_back(max_angle_deg);
      if (!zero_baseline) translation_errors.push_back(max_angle_deg);
      continue;
    }

    const Eigen::Matrix3d truth_rotation =
        pair.truth_stereo_to_fisheye.rotationMatrix();
    const Eigen::AngleAxisd delta(truth_rotation.transpose() *
                                  result.value().rotation);
    rotation_errors.push_back(std::abs(delta.angle()) * kRadToDeg);
    inlier_sum += result.value().inlier_count;

    if (!zero_baseline && result.value().direction_defined) {
      const Eigen::Vector3d truth_unit = truth_direction.normalized();
      const double cosine = std::clamp(
          truth_unit.dot(result.value().translation_direction), -1.0, 1.0);
      translation_errors.push_back(std::acos(cosine) * kRadToDeg);
    } else if (!zero_baseline) {
      translation_errors.push_back(max_angle_deg);
    }
  }

  auto auc_rot = aucCurve(rotation_errors, max_angle_deg);
  report.auc_rot = auc_rot.ok() ? auc_rot.value() : 0.0;
  auto auc_trans = aucCurve(translation_errors, max_angle_deg);
  report.auc_trans = auc_trans.ok() ? auc_trans.value() : 0.0;
  report.mean_inlier_matches =
      report.pairs_evaluated > 0
          ? inlier_sum / static_cast<double>(report.pairs_evaluated)
          : 0.0;
  return report;
}

}  // namespace hyslam
