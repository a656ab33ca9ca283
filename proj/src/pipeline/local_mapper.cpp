#include "hyslam/pipeline/local_mapper.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

#include "hyslam/features/matching.hpp"
#include "hyslam/geometry/triangulation.hpp"
#include "hyslam/optim/bundle_adjuster.hpp"
#include "hyslam/optim/residuals.hpp"

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

}  // namespace

LocalMapper::LocalMapper(WorldMap* map, KeyFrameDatabase* database,
                         const PipelineConfig& config)
    : map_(map), database_(database), config_(config) {}

void LocalMapper::setVocabulary(const Vocabulary* vocabulary) {
  vocabulary_ = vocabulary;
}

MappingStats LocalMapper::process(Id keyframe_id,
                                  const std::set<Id>& protected_keyframes) {
  MappingStats stats;
  std::unique_lock lock(map_->mutex());
  KeyFrame* kf = map_->keyframe(keyframe_id);
  if (!kf) return stats;

  // BoW registration for place recognition and guided matching.
  if (kf->bow.empty() && vocabulary_ && !vocabulary_->empty()) {
    std::vector<Descriptor> descriptors;
    descriptors.reserve(kf->features.size());
    for (const Feature& f : kf->features) descriptors.push_back(f.descriptor);
    vocabulary_->transform(descriptors, &kf->bow, &kf->feature_groups);
  }
  if (database_ && !kf->bow.empty()) database_->add(keyframe_id, kf->bow);

  if (kf->kind == CameraKind::kStereo)
    stats.new_points += createStereoPoints(keyframe_id);
  else
    stats.new_points += createTwoViewPoints(keyframe_id);

  std::set<Id> protect = protected_keyframes;
  protect.insert(keyframe_id);
  const CullResult culled = map_->cull(protect);
  stats.culled_points = culled.points_removed;
  stats.culled_keyframes = culled.keyframes_removed;

  stats.local_ba_ran = localBundleAdjust(keyframe_id);
  return stats;
}

int LocalMapper::createStereoPoints(Id keyframe_id) {
  KeyFrame* kf = map_->keyframe(keyframe_id);
  const StereoRig& rig = kf->camera->rig;
  const Pose camera_to_world = kf->pose.inverse();
  int created = 0;
  for (int i = 0; i < static_cast<int>(kf->features.size()); ++i) {
    if (kf->map_point_of_feature[i] != kInvalidId) continue;
    const Feature& f = kf->features[i];
    if (!f.hasStereo()) continue;
    auto point = triangulateStereo(f.u, f.v, f.right_u, rig);
    if (!point.ok()) continue;
    MapPoint mp;
    mp.position = camera_to_world * point.value();
    mp.descriptor = f.descriptor;
    mp.observations[keyframe_id] = i;
    mp.reference_keyframe = keyframe_id;
    mp.first_keyframe = keyframe_id;
    const Id mp_id = map_->createMapPoint(std::move(mp));
    map_->refreshMapPointStatistics(mp_id);
    ++created;
  }
  return created;
}

int LocalMapper::createTwoViewPoints(Id keyframe_id) {
  KeyFrame* kf = map_->keyframe(keyframe_id);

  // Strongest covisible neighbors of any kind, regardless of threshold.
  std::vector<std::pair<int, Id>> neighbors;
  for (const auto& [other_id, weight] : kf->covisibility)
    neighbors.emplace_back(weight, other_id);
  std::sort(neighbors.rbegin(), neighbors.rend());
  if (neighbors.size() > 5) neighbors.resize(5);

  std::vector<Feature> unmatched;
  std::vector<int> unmatched_index;
  for (int i = 0; i < static_cast<int>(kf->features.size()); ++i)
    if (kf->map_point_of_feature[i] == kInvalidId) {
      unmatched.push_back(kf->features[i]);
      unmatched_index.push_back(i);
    }

  int created = 0;
  for (const auto& [weight, neighbor_id] : neighbors) {
    const KeyFrame* other = map_->keyframe(neighbor_id);
    if (!other) continue;

    std::vector<Feature> other_unmatched;
    std::vector<int> other_index;
    for (int j = 0; j < static_cast<int>(other->features.size()); ++j)
      if (other->map_point_of_feature[j] == kInvalidId) {
        other_unmatched.push_back(other->features[j]);
        other_index.push_back(j);
      }
    if (other_unmatched.empty()) continue;

    BruteForceOptions options;
    options.ratio = 0.8;
    options.mutual_check = true;
    const auto pairs = matchBruteForce(unmatched, other_unmatched, options);

    // pose_ab maps neighbor-frame points into this keyframe's frame.
    const Pose pose_ab = kf->pose.compose(other->pose.inverse());
    for (const MatchPair& pair : pairs) {
      const int i = unmatched_index[pair.index_a];
      const int j = other_index[pair.index_b];
      if (kf->map_point_of_feature[i] != kInvalidId) continue;
      if (other->map_point_of_feature[j] != kInvalidId) continue;

      auto ray_a = kf->camera->unproject(
          Eigen::Vector2d(kf->features[i].u, kf->features[i].v));
      auto ray_b = other->camera->unproject(
          Eigen::Vector2d(other->features[j].u, other->features[j].v));
      if (!ray_a.ok() || !ray_b.ok()) continue;
      auto point = triangulateTwoView(ray_a.value(), ray_b.value(), pose_ab);
      if (!point.ok()) continue;
      const Eigen::Vector3d world = kf->pose.inverse() * point.value();

      // Accept only when the point reprojects well into both views.
      RobustConfig robust;
      bool consistent = true;
      for (const KeyFrame* view : {static_cast<const KeyFrame*>(kf), other}) {
        const Feature& f =
            view == kf ? kf->features[i] : other->features[j];
        Eigen::Vector3d residual;
        const ResidualKind kind = observationKind(*view, f);
        if (!evaluateReprojection(*view->camera, kind, view->pose, world,
                                  Eigen::Vector3d(f.u, f.v, f.right_u),
                                  &residual)) {
          consistent = false;
          break;
        }
        const double chi2 = residual.head(residualDim(kind)).squaredNorm() *
                            featureInvSigma2(f);
        if (chi2 > chi2Gate(robust, kind)) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;

      MapPoint mp;
      mp.position = world;
      mp.descriptor = kf->features[i].descriptor;
      mp.observations[keyframe_id] = i;
      mp.observations[neighbor_id] = j;
      mp.reference_keyframe = keyframe_id;
      mp.first_keyframe = keyframe_id;
      const Id mp_id = map_->createMapPoint(std::move(mp));
      map_->refreshMapPointStatistics(mp_id);
      ++created;
    }
  }
  return created;
}

bool LocalMapper::localBundleAdjust(Id keyframe_id) {
  const LocalWindow window = map_->localWindow(keyframe_id);
  if (window.points.empty()) return false;

  BaProblem problem;
  std::unordered_map<Id, int> pose_index;
  auto addPose = [&](Id kf_id, bool fixed) {
    if (pose_index.count(kf_id)) return;
    const KeyFrame* kf = map_->keyframe(kf_id);
    pose_index[kf_id] = static_cast<int>(problem.poses.size());
    problem.poses.push_back(kf->pose);
    problem.fixed.push_back(fixed || kf_id == map_->firstKeyFrameId());
  };
  for (Id kf_id : window.local_keyframes) addPose(kf_id, false);
  for (Id kf_id : window.fixed_keyframes) addPose(kf_id, true);

  std::unordered_map<Id, int> point_index;
  for (Id point_id : window.points) {
    const MapPoint* mp = map_->mapPoint(point_id);
    if (!mp) continue;
    point_index[point_id] = static_cast<int>(problem.points.size());
    problem.points.push_back(mp->position);
  }

  struct ObservationRef {
    Id point;
    Id keyframe;
  };
  std::vector<ObservationRef> refs;
  for (Id point_id : window.points) {
    const MapPoint* mp = map_->mapPoint(point_id);
    if (!mp) continue;
    for (const auto& [kf_id, feature_index] : mp->observations) {
      auto pit = pose_index.find(kf_id);
      if (pit == pose_index.end()) continue;
      const KeyFrame* kf = map_->keyframe(kf_id);
      const Feature& f = kf->features[feature_index];
      BaObservation obs;
      obs.pose_index = pit->second;
      obs.point_index = point_index.at(point_id);
      obs.kind = observationKind(*kf, f);
      obs.observed = Eigen::Vector3d(f.u, f.v, f.right_u);
      obs.inv_sigma2 = featureInvSigma2(f);
      obs.camera = kf->camera.get();
      problem.observations.push_back(obs);
      refs.push_back({point_id, kf_id});
    }
  }
  if (problem.observations.empty()) return false;

  auto result = bundleAdjust(problem);
  if (!result.ok()) return false;

  for (const auto& [kf_id, index] : pose_index)
    if (!problem.fixed[index]) map_->keyframe(kf_id)->pose = problem.poses[index];
  for (const auto& [point_id, index] : point_index)
    if (MapPoint* mp = map_->mapPoint(point_id))
      mp->position = problem.points[index];

  // Drop observations the chi-square gate rejected after convergence.
  for (std::size_t k = 0; k < refs.size(); ++k)
    if (!result.value().inlier[k])
      map_->eraseObservation(refs[k].point, refs[k].keyframe);
  for (const auto& [point_id, index] : point_index)
    if (map_->mapPoint(point_id)) map_->refreshMapPointStatistics(point_id);

  map_->bumpVersion();
  return true;
}

}  // namespace hyslam
