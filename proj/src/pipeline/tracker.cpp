#include "hyslam/pipeline/tracker.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <shared_mutex>

#include "hyslam/features/matching.hpp"
#include "hyslam/geometry/triangulation.hpp"
#include "hyslam/pipeline/guided_matching.hpp"
#include "hyslam/odometry/stereo_odometer.hpp"
#include "hyslam/optim/pose_optimizer.hpp"
#include "hyslam/tracking/mlpnp.hpp"

namespace hyslam {

namespace {

ResidualKind observationKind(CameraKind camera, const Feature& feature) {
  if (camera == CameraKind::kFisheye) return ResidualKind::kFisheye;
  return feature.hasStereo() ? ResidualKind::kStereo
                             : ResidualKind::kMonoPinhole;
}

Eigen::Vector3d observedVector(const Feature& feature) {
  return Eigen::Vector3d(feature.u, feature.v, feature.right_u);
}

double featureInvSigma2(const Feature& feature) {
  return invSigma2ForLevel(std::max(0, scaleLevel(feature.scale_sigma)));
}

// Unit bearing of a pixel observation through the frame's camera.
std::optional<Eigen::Vector3d> featureBearing(const Frame& frame,
                                              const Feature& feature) {
  auto bearing = frame.camera->unproject(Eigen::Vector2d(feature.u, feature.v));
  if (!bearing.ok()) return std::nullopt;
  return bearing.value();
}

struct Candidates {
  std::vector<ProjectedPoint> projected;
  std::vector<Id> ids;
};

}  // namespace

Tracker::Tracker(WorldMap* map, KeyFrameDatabase* database,
                 const PipelineConfig& config)
    : map_(map), database_(database), config_(config) {
  config_.validate();
}

void Tracker::setVocabulary(const Vocabulary* vocabulary) {
  vocabulary_ = vocabulary;
}

// --- small helpers ---------------------------------------------------------

namespace {

// Projects map points into the frame at `pose`, filtering by image bounds
// and the points' viewing-distance envelope.
Candidates projectCandidates(const WorldMap& map, const Frame& frame,
                             const Pose& pose, const std::vector<Id>& ids) {
  Candidates out;
  for (Id id : ids) {
    const MapPoint* mp = map.mapPoint(id);
    if (!mp) continue;
    const Eigen::Vector3d p_cam = pose * mp->position;
    if (frame.kind == CameraKind::kStereo && p_cam.z() < 0.1) continue;
    const double distance = p_cam.norm();
    if (distance < 0.1) continue;
    auto pixel = frame.camera->projectMono(p_cam);
    if (!pixel.ok() || !frame.camera->inImage(pixel.value())) continue;
    if (mp->d_min > 0.0 &&
        (distance < 0.8 * mp->d_min || distance > 1.25 * mp->d_max))
      continue;
    out.projected.push_back(
        {pixel.value(), mp->descriptor, mp->predictedScaleNorm(distance)});
    out.ids.push_back(id);
  }
  return out;
}

std::vector<Id> matchAgainstKeyFrame(const Frame& frame, const KeyFrame& kf,
                                     int* match_count) {
  return matchFeaturesToKeyFramePoints(frame.features, frame.feature_groups,
                                       kf, match_count);
}

}  // namespace

// --- pose optimization over the current match set --------------------------

bool Tracker::optimizeFrame(Frame& frame, MatchSet* matches, int min_inliers) {
  std::vector<PoseObservation> observations;
  std::vector<int> feature_of_observation;
  for (int i = 0; i < static_cast<int>(matches->point_of_feature.size()); ++i) {
    const Id mp_id = matches->point_of_feature[i];
    if (mp_id == kInvalidId) continue;
    const MapPoint* mp = map_->mapPoint(mp_id);
    if (!mp) {
      matches->point_of_feature[i] = kInvalidId;
      continue;
    }
    const Feature& f = frame.features[i];
    PoseObservation obs;
    obs.kind = observationKind(frame.kind, f);
    obs.observed = observedVector(f);
    obs.world_point = mp->position;
    obs.inv_sigma2 = featureInvSigma2(f);
    observations.push_back(obs);
    feature_of_observation.push_back(i);
  }
  if (static_cast<int>(observations.size()) < min_inliers) return false;

  auto result = optimizePoseOnly(frame.pose, *frame.camera, observations);
  if (!result.ok()) return false;

  frame.pose = result.value().pose;
  matches->count = 0;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const int i = feature_of_observation[k];
    if (result.value().inliers[k]) {
      ++matches->count;
    } else {
      matches->point_of_feature[i] = kInvalidId;
    }
  }
  return matches->count >= min_inliers;
}

// --- cascade stages ---------------------------------------------------------

bool Tracker::trackWithMotionModel(Frame& frame, const Pose& seed,
                                   MatchSet* matches) {
  if (!state_.last_stereo) return false;
  const Frame& last = *state_.last_stereo;
  std::vector<Id> last_points;
  for (Id mp : last.map_point_of_feature)
    if (mp != kInvalidId) last_points.push_back(mp);
  if (last_points.empty()) return false;

  const Candidates candidates =
      projectCandidates(*map_, frame, seed, last_points);
  WindowMatchOptions options;
  options.radius = config_.window_radius;
  options.focal = frame.camera->focal();
  const auto pairs =
      matchProjectionWindow(candidates.projected, frame.features, options);

  matches->point_of_feature.assign(frame.features.size(), kInvalidId);
  for (const MatchPair& pair : pairs)
    matches->point_of_feature[pair.index_b] = candidates.ids[pair.index_a];
  for (Id id : candidates.ids) visible_this_frame_.insert(id);

  frame.pose = seed;
  return optimizeFrame(frame, matches, config_.min_matches_track);
}

bool Tracker::trackReferenceKeyFrame(Frame& frame, Id reference,
                                     const Pose& seed, MatchSet* matches) {
  const KeyFrame* kf = map_->keyframe(reference);
  if (!kf) return false;
  int count = 0;
  matches->point_of_feature = matchAgainstKeyFrame(frame, *kf, &count);
  if (count < config_.min_matches_bow) return false;

  frame.pose = seed;
  // Without a trustworthy seed (fisheye registration, wide-baseline
  // revisits) bootstrap the pose from the bearings.
  if (frame.kind == CameraKind::kFisheye && count >= 6) {
    std::vector<PnPCorrespondence> correspondences;
    for (int i = 0; i < static_cast<int>(matches->point_of_feature.size());
         ++i) {
      const Id mp_id = matches->point_of_feature[i];
      if (mp_id == kInvalidId) continue;
      const MapPoint* mp = map_->mapPoint(mp_id);
      if (!mp) continue;
      auto bearing = featureBearing(frame, frame.features[i]);
      if (!bearing) continue;
      correspondences.push_back({*bearing, mp->position});
    }
    auto pnp = solveMlpnp(correspondences);
    if (pnp.ok()) frame.pose = pnp.value();
  }
  return optimizeFrame(frame, matches, config_.min_matches_bow);
}

bool Tracker::expandLocalWindow(Frame& frame, Id reference,
                                MatchSet* matches) {
  const KeyFrame* kf = map_->keyframe(reference);
  if (!kf) return false;
  const LocalWindow window = map_->localWindow(reference);

  std::set<Id> already;
  for (Id mp : matches->point_of_feature)
    if (mp != kInvalidId) already.insert(mp);
  std::vector<Id> extra;
  for (Id point : window.points)
    if (!already.count(point)) extra.push_back(point);

  const Candidates candidates =
      projectCandidates(*map_, frame, frame.pose, extra);
  WindowMatchOptions options;
  options.radius = config_.window_radius;
  options.focal = frame.camera->focal();
  const auto pairs =
      matchProjectionWindow(candidates.projected, frame.features, options);
  for (const MatchPair& pair : pairs) {
    if (matches->point_of_feature[pair.index_b] != kInvalidId) continue;
    matches->point_of_feature[pair.index_b] = candidates.ids[pair.index_a];
  }
  for (Id id : candidates.ids) visible_this_frame_.insert(id);

  return optimizeFrame(frame, matches, config_.min_matches_local);
}

bool Tracker::relocalize(Frame& frame, MatchSet* matches) {
  std::vector<Id> candidates;
  if (database_ && !database_->empty() && !frame.bow.empty()) {
    for (const auto& hit : database_->query(frame.bow, {})) {
      candidates.push_back(hit.keyframe);
      if (candidates.size() >= 5) break;
    }
  }
  // A lost fisheye stream additionally tries the live stereo reference.
  if (frame.kind == CameraKind::kFisheye &&
      state_.reference_stereo != kInvalidId)
    candidates.push_back(state_.reference_stereo);
  if (candidates.empty() && state_.reference_stereo != kInvalidId)
    candidates.push_back(state_.reference_stereo);

  for (Id candidate : candidates) {
    const KeyFrame* kf = map_->keyframe(candidate);
    if (!kf) continue;
    int count = 0;
    MatchSet attempt;
    attempt.point_of_feature = matchAgainstKeyFrame(frame, *kf, &count);
    if (count < config_.min_matches_bow) continue;

    std::vector<PnPCorrespondence> correspondences;
    std::vector<int> feature_of_correspondence;
    for (int i = 0; i < static_cast<int>(attempt.point_of_feature.size());
         ++i) {
      const Id mp_id = attempt.point_of_feature[i];
      if (mp_id == kInvalidId) continue;
      const MapPoint* mp = map_->mapPoint(mp_id);
      if (!mp) continue;
      auto bearing = featureBearing(frame, frame.features[i]);
      if (!bearing) continue;
      correspondences.push_back({*bearing, mp->position});
      feature_of_correspondence.push_back(i);
    }
    auto ransac = solveMlpnpRansac(correspondences);
    if (!ransac.ok()) continue;

    frame.pose = ransac.value().pose;
    for (std::size_t k = 0; k < correspondences.size(); ++k)
      if (!ransac.value().inliers[k])
        attempt.point_of_feature[feature_of_correspondence[k]] = kInvalidId;
    if (!optimizeFrame(frame, &attempt, config_.min_matches_bow)) continue;

    *matches = std::move(attempt);
    expandLocalWindow(frame, candidate, matches);
    if (matches->count >= config_.min_matches_bow) return true;
  }
  return false;
}

// --- keyframe handling ------------------------------------------------------

bool Tracker::needNewKeyFrame(const Frame& frame, Id reference,
                              int gap_frames) const {
  if (frame.matchedPointCount() <= config_.keyframe_min_tracked) return false;
  const KeyFrame* kf = map_->keyframe(reference);
  const int reference_tracked = kf ? kf->trackedPointCount() : 0;
  const bool overlap_dropped =
      frame.matchedPointCount() <
      config_.keyframe_tracked_ratio * reference_tracked;
  const bool gap_reached = gap_frames >= config_.keyframe_max_gap;
  return overlap_dropped || gap_reached;
}

Id Tracker::insertKeyFrame(const Frame& frame) {
  KeyFrame snapshot;
  snapshot.kind = frame.kind;
  snapshot.timestamp = frame.timestamp;
  snapshot.pose = frame.pose;
  snapshot.camera = frame.camera;
  snapshot.features = frame.features;
  snapshot.map_point_of_feature = frame.map_point_of_feature;
  snapshot.bow = frame.bow;
  snapshot.feature_groups = frame.feature_groups;
  std::unique_lock lock(map_->mutex());
  return map_->insertKeyFrame(std::move(snapshot));
}

void Tracker::updateReference(const Frame& frame, Id* reference) {
  // The reference becomes the keyframe sharing the most map point matches,
  // regardless of its camera kind.
  std::map<Id, int> shared;
  for (Id mp_id : frame.map_point_of_feature) {
    if (mp_id == kInvalidId) continue;
    const MapPoint* mp = map_->mapPoint(mp_id);
    if (!mp) continue;
    for (const auto& [kf_id, _] : mp->observations) ++shared[kf_id];
  }
  Id best = *reference;
  int best_count = 0;
  for (const auto& [kf_id, count] : shared)
    if (count > best_count) {
      best_count = count;
      best = kf_id;
    }
  if (best != kInvalidId) *reference = best;
}

void Tracker::recordPointStats(const std::vector<Id>& visible,
                               const std::vector<Id>& found) {
  std::unique_lock lock(map_->mutex());
  for (Id id : visible)
    if (MapPoint* mp = map_->mapPoint(id)) ++mp->visible;
  for (Id id : found)
    if (MapPoint* mp = map_->mapPoint(id)) ++mp->found;
}

// --- initialization ---------------------------------------------------------

TrackOutcome Tracker::initialize(Frame& frame) {
  TrackOutcome outcome;
  const int required =
      static_cast<int>(config_.init_fraction * config_.max_features);
  if (static_cast<int>(frame.features.size()) < required) return outcome;

  frame.pose = Pose::Identity();
  const Id kf_id = insertKeyFrame(frame);

  // The initial map holds every stereo keypoint with a valid disparity.
  const StereoRig& rig = frame.camera->rig;
  std::unique_lock lock(map_->mutex());
  const KeyFrame* kf = map_->keyframe(kf_id);
  int created = 0;
  for (int i = 0; i < static_cast<int>(frame.features.size()); ++i) {
    const Feature& f = frame.features[i];
    if (!f.hasStereo()) continue;
    auto point = triangulateStereo(f.u, f.v, f.right_u, rig);
    if (!point.ok()) continue;
    MapPoint mp;
    mp.position = point.value();  // keyframe pose is the world origin
    mp.descriptor = f.descriptor;
    mp.observations[kf_id] = i;
    mp.reference_keyframe = kf_id;
    mp.first_keyframe = kf_id;
    const Id mp_id = map_->createMapPoint(std::move(mp));
    map_->refreshMapPointStatistics(mp_id);
    ++created;
  }
  lock.unlock();
  (void)kf;

  state_.mode = TrackingMode::kTracking;
  state_.reference_stereo = kf_id;
  state_.frames_since_stereo_keyframe = 0;
  frame.map_point_of_feature = map_->keyframe(kf_id)->map_point_of_feature;
  state_.last_stereo = frame;
  state_.last_motion = Pose::Identity();

  outcome.tracked = true;
  outcome.pose = frame.pose;
  outcome.matches = created;
  outcome.keyframe_id = kf_id;
  outcome.stage = "initialize";
  return outcome;
}

// --- per-frame entry points -------------------------------------------------

TrackOutcome Tracker::processStereo(Frame frame) {
  TrackOutcome outcome;
  frame.map_point_of_feature.assign(frame.features.size(), kInvalidId);
  if (vocabulary_ && !vocabulary_->empty()) {
    std::vector<Descriptor> descriptors;
    descriptors.reserve(frame.features.size());
    for (const Feature& f : frame.features) descriptors.push_back(f.descriptor);
    vocabulary_->transform(descriptors, &frame.bow, &frame.feature_groups);
  }

  if (state_.mode == TrackingMode::kUninitialized) return initialize(frame);

  visible_this_frame_.clear();
  std::shared_lock lock(map_->mutex());

  MatchSet matches;
  matches.point_of_feature.assign(frame.features.size(), kInvalidId);
  bool have_pose = false;

  if (state_.mode == TrackingMode::kLostStereo) {
    if (relocalize(frame, &matches)) {
      have_pose = true;
      outcome.stage = "relocalize";
    } else {
      ++state_.frames_since_stereo_keyframe;
      return outcome;
    }
  } else {
    // Stage 1: stereo odometer between the previous and current frame.
    std::optional<Pose> odometry;
    if (state_.last_stereo) {
      const auto tracks = trackCircular(state_.last_stereo->features,
                                        frame.features, frame.camera->rig);
      auto motion = estimateEgoMotion(tracks, frame.camera->rig);
      if (motion.ok()) odometry = motion.value().motion;
    }
    const Pose previous =
        state_.last_stereo ? state_.last_stereo->pose : Pose::Identity();
    const Pose seed =
        odometry ? odometry->compose(previous) : previous;

    // Stages 2-4: seed + window matching to the last frame + pose-only
    // optimization.
    if (trackWithMotionModel(frame, seed, &matches)) {
      have_pose = true;
      outcome.stage = "motion";
    } else if (trackReferenceKeyFrame(frame, state_.reference_stereo, seed,
                                      &matches)) {
      // Stage 5: BoW-guided fallback to the reference keyframe.
      have_pose = true;
      outcome.stage = "reference";
    } else if (odometry) {
      // Stage 6: trust the odometry pose and try to recover matches below.
      frame.pose = seed;
      matches.point_of_feature.assign(frame.features.size(), kInvalidId);
      matches.count = 0;
      have_pose = true;
      outcome.stage = "odometry";
    }

    // Stage 7: local-window expansion and re-optimization.
    if (have_pose) {
      const bool expanded =
          expandLocalWindow(frame, state_.reference_stereo, &matches);
      if (!expanded && outcome.stage == "odometry") have_pose = false;
      if (expanded) outcome.stage += "+local";
    }
    if (!have_pose) {
      lock.unlock();
      state_.mode = TrackingMode::kLostStereo;
      ++state_.frames_since_stereo_keyframe;
      return outcome;
    }
  }

  // Bookkeeping under the exclusive lock: point statistics, reference
  // update, keyframe decision.
  frame.map_point_of_feature = matches.point_of_feature;
  updateReference(frame, &state_.reference_stereo);
  lock.unlock();

  std::vector<Id> found;
  for (Id mp : frame.map_point_of_feature)
    if (mp != kInvalidId) found.push_back(mp);
  recordPointStats({visible_this_frame_.begin(), visible_this_frame_.end()},
                   found);

  if (state_.mode == TrackingMode::kLostStereo)
    state_.mode = TrackingMode::kTracking;
  ++state_.frames_since_stereo_keyframe;
  if (needNewKeyFrame(frame, state_.reference_stereo,
                      state_.frames_since_stereo_keyframe)) {
    outcome.keyframe_id = insertKeyFrame(frame);
    state_.reference_stereo = outcome.keyframe_id;
    state_.frames_since_stereo_keyframe = 0;
    frame.map_point_of_feature =
        map_->keyframe(outcome.keyframe_id)->map_point_of_feature;
  }

  if (state_.last_stereo)
    state_.last_motion = frame.pose.compose(state_.last_stereo->pose.inverse());
  state_.last_stereo = frame;

  outcome.tracked = true;
  outcome.pose = frame.pose;
  outcome.matches = matches.count;
  return outcome;
}

TrackOutcome Tracker::processFisheye(Frame frame) {
  TrackOutcome outcome;
  frame.map_point_of_feature.assign(frame.features.size(), kInvalidId);
  // Fisheye registration rides on a healthy stereo track.
  if (state_.mode != TrackingMode::kTracking &&
      state_.mode != TrackingMode::kLostFisheyeOnly) {
    outcome.stage = "stereo-not-tracked";
    return outcome;
  }
  if (vocabulary_ && !vocabulary_->empty()) {
    std::vector<Descriptor> descriptors;
    descriptors.reserve(frame.features.size());
    for (const Feature& f : frame.features) descriptors.push_back(f.descriptor);
    vocabulary_->transform(descriptors, &frame.bow, &frame.feature_groups);
  }

  visible_this_frame_.clear();
  std::shared_lock lock(map_->mutex());

  MatchSet matches;
  matches.point_of_feature.assign(frame.features.size(), kInvalidId);
  bool have_pose = false;
  Id anchor = state_.reference_fisheye != kInvalidId
                  ? state_.reference_fisheye
                  : state_.reference_stereo;

  if (state_.mode == TrackingMode::kLostFisheyeOnly) {
    if (relocalize(frame, &matches)) {
      have_pose = true;
      outcome.stage = "relocalize";
    }
  } else {
    const Pose seed = state_.last_fisheye
                          ? state_.last_fisheye->pose
                          : (map_->keyframe(anchor)
                                 ? map_->keyframe(anchor)->pose
                                 : Pose::Identity());
    // Step 1: track the fisheye reference keyframe's points.
    if (state_.reference_fisheye != kInvalidId &&
        trackReferenceKeyFrame(frame, state_.reference_fisheye, seed,
                               &matches)) {
      have_pose = true;
      anchor = state_.reference_fisheye;
      outcome.stage = "reference-fisheye";
    } else if (trackReferenceKeyFrame(frame, state_.reference_stereo, seed,
                                      &matches)) {
      // Step 2: fall back to the stereo reference keyframe via MLPnP.
      have_pose = true;
      anchor = state_.reference_stereo;
      outcome.stage = "reference-stereo";
    }
    // Step 3: local-window expansion and re-optimization.
    if (have_pose && expandLocalWindow(frame, anchor, &matches))
      outcome.stage += "+local";
  }

  if (!have_pose) {
    lock.unlock();
    state_.mode = TrackingMode::kLostFisheyeOnly;
    ++state_.frames_since_fisheye_keyframe;
    return outcome;
  }

  frame.map_point_of_feature = matches.point_of_feature;
  updateReference(frame, &state_.reference_fisheye);
  lock.unlock();

  std::vector<Id> found;
  for (Id mp : frame.map_point_of_feature)
    if (mp != kInvalidId) found.push_back(mp);
  recordPointStats({visible_this_frame_.begin(), visible_this_frame_.end()},
                   found);

  state_.mode = TrackingMode::kTracking;
  ++state_.frames_since_fisheye_keyframe;
  const Id decision_reference = state_.reference_fisheye != kInvalidId
                                    ? state_.reference_fisheye
                                    : anchor;
  if (needNewKeyFrame(frame, decision_reference,
                      state_.frames_since_fisheye_keyframe)) {
    outcome.keyframe_id = insertKeyFrame(frame);
    state_.reference_fisheye = outcome.keyframe_id;
    state_.frames_since_fisheye_keyframe = 0;
    frame.map_point_of_feature =
        map_->keyframe(outcome.keyframe_id)->map_point_of_feature;
  }
  state_.last_fisheye = frame;

  outcome.tracked = true;
  outcome.pose = frame.pose;
  outcome.matches = matches.count;
  return outcome;
}

}  // namespace hyslam
