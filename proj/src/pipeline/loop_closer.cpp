#include "hyslam/pipeline/loop_closer.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

#include "hyslam/optim/bundle_adjuster.hpp"
#include "hyslam/pipeline/guided_matching.hpp"
#include "hyslam/tracking/mlpnp.hpp"

namespace hyslam {

namespace {

ResidualKind observationKind(const KeyFrame& kf, const Feature& feature) {
  if (kf.kind == CameraKind::kFisheye) return ResidualKind::kFisheye;
  return feature.hasStereo() ? ResidualKind::kStereo
                             : ResidualKind::kMonoPinhole;
}

double featureInvSigma2(const Feature& feature) {
  return invSigma2ForLevel(std::max(0, scaleLevel(feature.scale_sigma)));
}

std::set<Id> covisibilityGroup(const KeyFrame& kf) {
  std::set<Id> group;
  group.insert(kf.id);
  for (const auto& [other_id, _] : kf.covisibility) group.insert(other_id);
  return group;
}

}  // namespace

LoopCloser::LoopCloser(WorldMap* map, KeyFrameDatabase* database,
                       const PipelineConfig& config)
    : map_(map), database_(database), config_(config) {}

LoopEvent LoopCloser::onKeyFrame(Id keyframe_id) {
  LoopEvent event;
  event.keyframe = keyframe_id;
  std::unique_lock lock(map_->mutex());
  KeyFrame* kf = map_->keyframe(keyframe_id);
  if (!kf || kf->bow.empty() || !database_) return event;

  const std::set<Id> exclude = covisibilityGroup(*kf);

  // Candidates must score at least as well as the weakest covisible
  // neighbor does against the query.
  double min_score = 1.0;
  bool have_neighbor = false;
  for (const auto& [other_id, _] : kf->covisibility) {
    const KeyFrame* other = map_->keyframe(other_id);
    if (!other || other->bow.empty()) continue;
    min_score = std::min(min_score, bowScore(kf->bow, other->bow));
    have_neighbor = true;
  }
  if (!have_neighbor) min_score = 0.0;

  const auto candidates = database_->query(kf->bow, exclude, min_score);

  // Temporal consistency: a candidate's covisibility group must overlap
  // groups seen over consecutive keyframe insertions.
  std::vector<ConsistencyGroup> next_groups;
  std::vector<Id> consistent_candidates;
  for (const auto& candidate : candidates) {
    const KeyFrame* candidate_kf = map_->keyframe(candidate.keyframe);
    if (!candidate_kf) continue;
    const std::set<Id> group = covisibilityGroup(*candidate_kf);
    int count = 0;
    for (const ConsistencyGroup& previous : consistent_groups_) {
      const bool overlaps = std::any_of(
          group.begin(), group.end(),
          [&](Id id) { return previous.keyframes.count(id) > 0; });
      if (overlaps) count = std::max(count, previous.count + 1);
    }
    next_groups.push_back({group, count});
    if (count + 1 >= config_.loop_consistency)
      consistent_candidates.push_back(candidate.keyframe);
  }
  consistent_groups_ = std::move(next_groups);
  if (consistent_candidates.empty()) return event;

  for (Id candidate_id : consistent_candidates) {
    KeyFrame* loop_kf = map_->keyframe(candidate_id);
    if (!loop_kf) continue;

    int count = 0;
    const std::vector<Id> point_of_feature = matchFeaturesToKeyFramePoints(
        kf->features, kf->feature_groups, *loop_kf, &count);
    if (count < config_.loop_min_inliers) continue;

    std::vector<PnPCorrespondence> correspondences;
    std::vector<std::pair<int, Id>> feature_to_loop_point;
    for (int i = 0; i < static_cast<int>(point_of_feature.size()); ++i) {
      const Id mp_id = point_of_feature[i];
      if (mp_id == kInvalidId) continue;
      const MapPoint* mp = map_->mapPoint(mp_id);
      if (!mp) continue;
      auto bearing = kf->camera->unproject(
          Eigen::Vector2d(kf->features[i].u, kf->features[i].v));
      if (!bearing.ok()) continue;
      correspondences.push_back({bearing.value(), mp->position});
      feature_to_loop_point.emplace_back(i, mp_id);
    }

    PnPRansacConfig ransac;
    ransac.min_inliers = config_.loop_min_inliers;
    auto result = solveMlpnpRansac(correspondences, ransac);
    if (!result.ok()) continue;

    event.detected = true;
    event.loop_keyframe = candidate_id;
    event.inliers = result.value().inlier_count;
    event.corrected_pose = result.value().pose;

    std::vector<std::pair<int, Id>> inlier_pairs;
    for (std::size_t k = 0; k < feature_to_loop_point.size(); ++k)
      if (result.value().inliers[k])
        inlier_pairs.push_back(feature_to_loop_point[k]);

    closeLoop(*kf, *loop_kf, result.value().pose, inlier_pairs);
    event.closed = true;
    consistent_groups_.clear();
    return event;
  }
  return event;
}

void LoopCloser::closeLoop(
    KeyFrame& current, KeyFrame& loop_kf, const Pose& corrected_pose,
    const std::vector<std::pair<int, Id>>& feature_to_loop_point) {
  // World-frame correction derived from the current keyframe: a point seen
  // at camera coordinates c satisfies c = T_old * p_old = T_new * p_new,
  // so p_new = S * p_old with S = T_new^-1 * T_old.
  const Pose old_pose = current.pose;
  const Pose correction = corrected_pose.inverse().compose(old_pose);

  const std::set<Id> group = covisibilityGroup(current);

  // Correct the drifted points first: those anchored on the current side.
  for (Id point_id : map_->mapPointIds()) {
    MapPoint* mp = map_->mapPoint(point_id);
    if (!mp) continue;
    if (!group.count(mp->reference_keyframe)) continue;
    // Skip points also seen from outside the group: they are anchored by
    // the older, trusted side.
    bool outside = false;
    for (const auto& [kf_id, _] : mp->observations)
      if (!group.count(kf_id)) {
        outside = true;
        break;
      }
    if (outside) continue;
    mp->position = correction * mp->position;
  }
  for (Id kf_id : group) {
    KeyFrame* kf = map_->keyframe(kf_id);
    if (!kf || kf_id == map_->firstKeyFrameId()) continue;
    kf->pose = kf->pose.compose(correction.inverse());
  }

  // Fuse the loop-side points into the current keyframe's features; when a
  // feature already carries a (duplicated) point, merge into the older one.
  for (const auto& [feature_index, loop_point] : feature_to_loop_point) {
    if (!map_->mapPoint(loop_point)) continue;
    const Id existing = current.map_point_of_feature[feature_index];
    if (existing == loop_point) continue;
    if (existing == kInvalidId) {
      map_->addObservation(loop_point, current.id, feature_index);
    } else {
      const Id kept = std::min(existing, loop_point);
      const Id duplicate = std::max(existing, loop_point);
      map_->fuseMapPoints(kept, duplicate);
    }
  }

  current.loop_edges.insert(loop_kf.id);
  loop_kf.loop_edges.insert(current.id);
  map_->bumpVersion();
}

bool LoopCloser::fullBundleAdjust(const std::atomic<bool>* abort) {
  BaProblem problem;
  std::unordered_map<Id, int> pose_index;
  std::unordered_map<Id, int> point_index;
  {
    std::unique_lock lock(map_->mutex());
    for (Id kf_id : map_->keyframeIds()) {
      const KeyFrame* kf = map_->keyframe(kf_id);
      pose_index[kf_id] = static_cast<int>(problem.poses.size());
      problem.poses.push_back(kf->pose);
      problem.fixed.push_back(kf_id == map_->firstKeyFrameId());
    }
    for (Id point_id : map_->mapPointIds()) {
      const MapPoint* mp = map_->mapPoint(point_id);
      point_index[point_id] = static_cast<int>(problem.points.size());
      problem.points.push_back(mp->position);
      for (const auto& [kf_id, feature_index] : mp->observations) {
        const KeyFrame* kf = map_->keyframe(kf_id);
        const Feature& f = kf->features[feature_index];
        BaObservation obs;
        obs.pose_index = pose_index.at(kf_id);
        obs.point_index = point_index.at(point_id);
        obs.kind = observationKind(*kf, f);
        obs.observed = Eigen::Vector3d(f.u, f.v, f.right_u);
        obs.inv_sigma2 = featureInvSigma2(f);
        obs.camera = kf->camera.get();
        problem.observations.push_back(obs);
      }
    }
  }
  if (problem.observations.empty()) return false;

  auto result = bundleAdjust(problem, RobustConfig{}, abort);
  if (!result.ok() || result.value().aborted) return false;

  std::unordered_map<Id, Pose> optimized_poses;
  std::unordered_map<Id, Eigen::Vector3d> optimized_points;
  for (const auto& [kf_id, index] : pose_index)
    optimized_poses[kf_id] = problem.poses[index];
  for (const auto& [point_id, index] : point_index)
    optimized_points[point_id] = problem.points[index];

  std::unique_lock lock(map_->mutex());
  map_->propagateSpanningTree(optimized_poses, optimized_points);
  return true;
}

}  // namespace hyslam
