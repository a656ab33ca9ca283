#include "hyslam/map/world_map.hpp"

#include <algorithm>
#include <cmath>

namespace hyslam {

KeyFrame* WorldMap::keyframe(Id id) {
  auto it = keyframes_.find(id);
  return it == keyframes_.end() ? nullptr : it->second.get();
}

const KeyFrame* WorldMap::keyframe(Id id) const {
  auto it = keyframes_.find(id);
  return it == keyframes_.end() ? nullptr : it->second.get();
}

MapPoint* WorldMap::mapPoint(Id id) {
  auto it = map_points_.find(id);
  return it == map_points_.end() ? nullptr : it->second.get();
}

const MapPoint* WorldMap::mapPoint(Id id) const {
  auto it = map_points_.find(id);
  return it == map_points_.end() ? nullptr : it->second.get();
}

std::vector<Id> WorldMap::keyframeIds() const {
  std::vector<Id> ids;
  ids.reserve(keyframes_.size());
  for (const auto& [id, kf] : keyframes_) ids.push_back(id);
  return ids;
}

std::vector<Id> WorldMap::mapPointIds() const {
  std::vector<Id> ids;
  ids.reserve(map_points_.size());
  for (const auto& [id, mp] : map_points_) ids.push_back(id);
  return ids;
}

int WorldMap::sharedObservations(const KeyFrame& a, const KeyFrame& b) const {
  int count = 0;
  for (Id mp_id : a.map_point_of_feature) {
    if (mp_id == kInvalidId) continue;
    const MapPoint* mp = mapPoint(mp_id);
    if (mp && mp->observations.count(b.id)) ++count;
  }
  return count;
}

// Covisibility weights are maintained incrementally: every observation
// add/remove adjusts the pair counts of the point's observers, so the
// stored weights are exact after every mutation.
void WorldMap::adjustCovisibility(const MapPoint& point, Id keyframe_id,
                                  int delta) {
  KeyFrame* kf = keyframe(keyframe_id);
  if (!kf) return;
  for (const auto& [other_id, _] : point.observations) {
    if (other_id == keyframe_id) continue;
    KeyFrame* other = keyframe(other_id);
    if (!other) continue;
    const int weight = (kf->covisibility[other_id] += delta);
    other->covisibility[keyframe_id] = weight;
    if (weight <= 0) {
      kf->covisibility.erase(other_id);
      other->covisibility.erase(keyframe_id);
    }
  }
}

std::vector<std::pair<int, Id>> WorldMap::covisibleNeighbors(
    const KeyFrame& kf) const {
  std::vector<std::pair<int, Id>> neighbors;
  for (const auto& [other_id, weight] : kf.covisibility)
    if (weight >= covisibility_threshold)
      neighbors.emplace_back(weight, other_id);
  std::sort(neighbors.rbegin(), neighbors.rend());
  return neighbors;
}

Id WorldMap::insertKeyFrame(KeyFrame snapshot) {
  snapshot.id = next_keyframe_id_++;
  snapshot.covisibility.clear();
  snapshot.children.clear();
  snapshot.parent = kInvalidId;
  const Id id = snapshot.id;
  auto& kf = *(keyframes_[id] = std::make_unique<KeyFrame>(std::move(snapshot)));
  kf.map_point_of_feature.resize(kf.features.size(), kInvalidId);

  // Register observations on the referenced map points.
  for (int i = 0; i < static_cast<int>(kf.map_point_of_feature.size()); ++i) {
    const Id mp_id = kf.map_point_of_feature[i];
    if (mp_id == kInvalidId) continue;
    MapPoint* mp = mapPoint(mp_id);
    if (!mp || mp->observations.count(id)) {
      kf.map_point_of_feature[i] = kInvalidId;
      continue;
    }
    adjustCovisibility(*mp, id, +1);
    mp->observations[id] = i;
  }

  // Spanning-tree parent: the neighbor sharing the most observations at
  // insertion time, regardless of the covisibility threshold.
  if (id != firstKeyFrameId()) {
    Id best = kInvalidId;
    int best_weight = -1;
    for (const auto& [other_id, weight] : kf.covisibility) {
      if (weight > best_weight) {
        best_weight = weight;
        best = other_id;
      }
    }
    if (best == kInvalidId) {
      // No shared observations yet; attach to the previous keyframe.
      for (const auto& [other_id, other] : keyframes_)
        if (other_id != id && (best == kInvalidId || other_id > best))
          best = other_id;
    }
    kf.parent = best;
    if (best != kInvalidId) keyframe(best)->children.insert(id);
  }

  ++version_;
  return id;
}

Id WorldMap::createMapPoint(MapPoint point) {
  point.id = next_point_id_++;
  const Id id = point.id;
  auto& mp = *(map_points_[id] = std::make_unique<MapPoint>(std::move(point)));
  // Register any pre-filled observations on the keyframes.
  const auto observations = mp.observations;
  mp.observations.clear();
  for (const auto& [kf_id, feature_index] : observations) {
    KeyFrame* kf = keyframe(kf_id);
    if (!kf) continue;
    adjustCovisibility(mp, kf_id, +1);
    mp.observations[kf_id] = feature_index;
    kf->map_point_of_feature[feature_index] = id;
  }
  recent_points_.push_back(id);
  ++version_;
  return id;
}

void WorldMap::addObservation(Id point_id, Id keyframe_id, int feature_index) {
  MapPoint* mp = mapPoint(point_id);
  KeyFrame* kf = keyframe(keyframe_id);
  if (!mp || !kf || mp->observations.count(keyframe_id)) return;
  adjustCovisibility(*mp, keyframe_id, +1);
  mp->observations[keyframe_id] = feature_index;
  kf->map_point_of_feature[feature_index] = point_id;
  ++version_;
}

void WorldMap::eraseObservation(Id point_id, Id keyframe_id) {
  MapPoint* mp = mapPoint(point_id);
  if (!mp) return;
  auto it = mp->observations.find(keyframe_id);
  if (it == mp->observations.end()) return;
  KeyFrame* kf = keyframe(keyframe_id);
  if (kf) kf->map_point_of_feature[it->second] = kInvalidId;
  mp->observations.erase(it);
  adjustCovisibility(*mp, keyframe_id, -1);
  ++version_;
  if (mp->observations.empty()) {
    removeMapPoint(point_id);
    return;
  }
  if (mp->reference_keyframe == keyframe_id)
    mp->reference_keyframe = mp->observations.begin()->first;
}

void WorldMap::removeMapPoint(Id point_id) {
  MapPoint* mp = mapPoint(point_id);
  if (!mp) return;
  while (!mp->observations.empty()) {
    const auto [kf_id, feature_index] = *mp->observations.begin();
    KeyFrame* kf = keyframe(kf_id);
    if (kf) kf->map_point_of_feature[feature_index] = kInvalidId;
    mp->observations.erase(mp->observations.begin());
    adjustCovisibility(*mp, kf_id, -1);
  }
  map_points_.erase(point_id);
  ++version_;
}

void WorldMap::fuseMapPoints(Id kept, Id duplicate) {
  if (kept == duplicate) return;
  MapPoint* keep = mapPoint(kept);
  MapPoint* dup = mapPoint(duplicate);
  if (!keep || !dup) return;
  const auto observations = dup->observations;
  const int found = dup->found;
  const int visible = dup->visible;
  removeMapPoint(duplicate);
  for (const auto& [kf_id, feature_index] : observations) {
    if (keep->observations.count(kf_id)) continue;
    addObservation(kept, kf_id, feature_index);
  }
  keep->found += found;
  keep->visible += visible;
  refreshMapPointStatistics(kept);
  ++version_;
}

void WorldMap::updateCovisibility(Id keyframe_id) {
  KeyFrame* kf = keyframe(keyframe_id);
  if (!kf) return;

  std::map<Id, int> counts;
  for (Id mp_id : kf->map_point_of_feature) {
    if (mp_id == kInvalidId) continue;
    const MapPoint* mp = mapPoint(mp_id);
    if (!mp) continue;
    for (const auto& [other_id, _] : mp->observations)
      if (other_id != keyframe_id) ++counts[other_id];
  }

  for (const auto& [other_id, _] : kf->covisibility) {
    if (!counts.count(other_id)) {
      KeyFrame* other = keyframe(other_id);
      if (other) other->covisibility.erase(keyframe_id);
    }
  }
  kf->covisibility.clear();
  for (const auto& [other_id, weight] : counts) {
    kf->covisibility[other_id] = weight;
    KeyFrame* other = keyframe(other_id);
    if (other) other->covisibility[keyframe_id] = weight;
  }
  ++version_;
}

void WorldMap::refreshMapPointStatistics(Id point_id) {
  MapPoint* mp = mapPoint(point_id);
  if (!mp || mp->observations.empty()) return;

  // Representative descriptor: member with minimum median distance to the
  // other members.
  std::vector<const Descriptor*> descriptors;
  for (const auto& [kf_id, feature_index] : mp->observations) {
    const KeyFrame* kf = keyframe(kf_id);
    if (kf) descriptors.push_back(&kf->features[feature_index].descriptor);
  }
  if (!descriptors.empty()) {
    double best_median = std::numeric_limits<double>::max();
    int best = 0;
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
      std::vector<float> distances;
      distances.reserve(descriptors.size());
      for (std::size_t j = 0; j < descriptors.size(); ++j)
        distances.push_back(
            descriptorDistance(*descriptors[i], *descriptors[j]));
      std::nth_element(distances.begin(),
                       distances.begin() + distances.size() / 2,
                       distances.end());
      const double median = distances[distances.size() / 2];
      if (median < best_median) {
        best_median = median;
        best = static_cast<int>(i);
      }
    }
    mp->descriptor = *descriptors[best];
  }

  // Mean viewing direction and focal-normalized distance bounds from the
  // reference observation.
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  for (const auto& [kf_id, _] : mp->observations) {
    const KeyFrame* kf = keyframe(kf_id);
    if (!kf) continue;
    const Eigen::Vector3d dir = mp->position - kf->pose.center();
    if (dir.norm() > 1e-12) normal += dir.normalized();
  }
  if (normal.norm() > 1e-12) mp->normal = normal.normalized();

  if (!mp->observations.count(mp->reference_keyframe))
    mp->reference_keyframe = mp->observations.begin()->first;
  const KeyFrame* ref = keyframe(mp->reference_keyframe);
  if (ref) {
    const int feature_index = mp->observations.at(mp->reference_keyframe);
    const double distance = (mp->position - ref->pose.center()).norm();
    const double scale_norm = normalizeScale(
        ref->features[feature_index].scale_sigma, ref->focal());
    mp->normalized_size = scale_norm * distance;
    // Detectable over +-4 scale levels around the observed one.
    const double range = std::pow(kScaleLevelFactor, 4.0);
    mp->d_min = distance / range;
    mp->d_max = distance * range;
  }
  ++version_;
}

LocalWindow WorldMap::localWindow(Id keyframe_id) const {
  LocalWindow window;
  const KeyFrame* kf = keyframe(keyframe_id);
  if (!kf) return window;

  window.local_keyframes.push_back(keyframe_id);
  const auto neighbors = covisibleNeighbors(*kf);
  for (const auto& [weight, other_id] : neighbors) {
    if (static_cast<int>(window.local_keyframes.size()) > local_window_cap)
      break;
    window.local_keyframes.push_back(other_id);
  }

  std::set<Id> local_set(window.local_keyframes.begin(),
                         window.local_keyframes.end());
  std::set<Id> point_set;
  for (Id local_id : window.local_keyframes) {
    const KeyFrame* local = keyframe(local_id);
    for (Id mp_id : local->map_point_of_feature)
      if (mp_id != kInvalidId && mapPoint(mp_id)) point_set.insert(mp_id);
  }
  window.points.assign(point_set.begin(), point_set.end());

  std::set<Id> fixed_set;
  for (Id mp_id : window.points) {
    const MapPoint* mp = mapPoint(mp_id);
    for (const auto& [observer_id, _] : mp->observations)
      if (!local_set.count(observer_id)) fixed_set.insert(observer_id);
  }
  window.fixed_keyframes.assign(fixed_set.begin(), fixed_set.end());
  return window;
}

void WorldMap::propagateSpanningTree(
    const std::unordered_map<Id, Pose>& optimized_poses,
    const std::unordered_map<Id, Eigen::Vector3d>& optimized_points) {
  // Parents always have lower ids than their children (insertion order,
  // and culling reparents to grandparents), so one ascending pass settles
  // the corrective transforms.
  std::unordered_map<Id, Pose> old_poses;
  std::unordered_map<Id, Pose> new_poses;
  for (auto& [id, kf] : keyframes_) {
    old_poses[id] = kf->pose;
    auto it = optimized_poses.find(id);
    if (it != optimized_poses.end()) {
      new_poses[id] = it->second;
    } else if (kf->parent != kInvalidId && new_poses.count(kf->parent)) {
      // Preserve the parent-relative pose across the correction.
      const Pose relative = kf->pose * old_poses[kf->parent].inverse();
      new_poses[id] = relative * new_poses[kf->parent];
    } else {
      new_poses[id] = kf->pose;
    }
    kf->pose = new_poses[id];
  }

  for (auto& [id, mp] : map_points_) {
    auto it = optimized_points.find(id);
    if (it != optimized_points.end()) {
      mp->position = it->second;
      continue;
    }
    const Id ref = mp->reference_keyframe;
    if (ref != kInvalidId && old_poses.count(ref)) {
      // Move the point with its reference keyframe's correction.
      mp->position = new_poses[ref].inverse() * (old_poses[ref] * mp->position);
    }
  }
  ++version_;
}

CullResult WorldMap::cull(const std::set<Id>& protected_keyframes) {
  CullResult result;
  const Id latest =
      keyframes_.empty() ? kInvalidId : keyframes_.rbegin()->first;

  // Recent map points: must stay findable and earn three observers.
  std::deque<Id> survivors;
  for (Id point_id : recent_points_) {
    MapPoint* mp = mapPoint(point_id);
    if (!mp) continue;
    const Id age = latest - mp->first_keyframe;
    if (mp->visible > 0 && mp->foundRatio() < 0.25) {
      removeMapPoint(point_id);
      ++result.points_removed;
      continue;
    }
    // After the grace period a point needs covisible support.
    if (age >= 3 && static_cast<int>(mp->observations.size()) < 3) {
      removeMapPoint(point_id);
      ++result.points_removed;
      continue;
    }
    if (age <= 3) survivors.push_back(point_id);
  }
  recent_points_ = std::move(survivors);

  // Redundant keyframes: >= 90% of their points seen by >= 3 other
  // keyframes at the same or a finer scale.
  std::vector<Id> to_remove;
  for (const auto& [kf_id, kf] : keyframes_) {
    if (kf_id == firstKeyFrameId() || protected_keyframes.count(kf_id))
      continue;
    int tracked = 0;
    int redundant = 0;
    for (int i = 0; i < static_cast<int>(kf->map_point_of_feature.size());
         ++i) {
      const Id mp_id = kf->map_point_of_feature[i];
      if (mp_id == kInvalidId) continue;
      const MapPoint* mp = mapPoint(mp_id);
      if (!mp) continue;
      ++tracked;
      const double scale_here =
          normalizeScale(kf->features[i].scale_sigma, kf->focal());
      int finer_observers = 0;
      for (const auto& [other_id, other_index] : mp->observations) {
        if (other_id == kf_id) continue;
        const KeyFrame* other = keyframe(other_id);
        if (!other) continue;
        const double scale_there = normalizeScale(
            other->features[other_index].scale_sigma, other->focal());
        if (scale_there <= scale_here * kScaleLevelFactor) ++finer_observers;
      }
      if (finer_observers >= 3) ++redundant;
    }
    if (tracked > 0 && redundant >= static_cast<int>(0.9 * tracked))
      to_remove.push_back(kf_id);
  }
  for (Id kf_id : to_remove) {
    removeKeyFrame(kf_id);
    ++result.keyframes_removed;
  }
  if (result.points_removed > 0 || result.keyframes_removed > 0) ++version_;
  return result;
}

void WorldMap::removeKeyFrame(Id keyframe_id) {
  KeyFrame* kf = keyframe(keyframe_id);
  if (!kf) return;

  for (int i = 0; i < static_cast<int>(kf->map_point_of_feature.size()); ++i) {
    const Id mp_id = kf->map_point_of_feature[i];
    if (mp_id != kInvalidId) eraseObservation(mp_id, keyframe_id);
  }

  for (const auto& [other_id, _] : kf->covisibility) {
    KeyFrame* other = keyframe(other_id);
    if (other) other->covisibility.erase(keyframe_id);
  }

  // Reconnect the spanning tree: children move to the grandparent.
  const Id grandparent = kf->parent;
  for (Id child_id : kf->children) {
    KeyFrame* child = keyframe(child_id);
    if (!child) continue;
    child->parent = grandparent;
    if (grandparent != kInvalidId)
      keyframe(grandparent)->children.insert(child_id);
  }
  if (kf->parent != kInvalidId) {
    KeyFrame* parent = keyframe(kf->parent);
    if (parent) parent->children.erase(keyframe_id);
  }

  keyframes_.erase(keyframe_id);
  ++version_;
}

AuditReport WorldMap::audit() const {
  AuditReport report;
  auto fail = [&](const std::string& message) {
    report.ok = false;
    report.violations.push_back(message);
  };

  // Observation links must be bidirectional.
  for (const auto& [mp_id, mp] : map_points_) {
    if (mp->observations.empty())
      fail("map point " + std::to_string(mp_id) + " has no observations");
    for (const auto& [kf_id, feature_index] : mp->observations) {
      const KeyFrame* kf = keyframe(kf_id);
      if (!kf) {
        fail("map point " + std::to_string(mp_id) +
             " observed by missing keyframe " + std::to_string(kf_id));
        continue;
      }
      if (feature_index < 0 ||
          feature_index >= static_cast<int>(kf->map_point_of_feature.size()) ||
          kf->map_point_of_feature[feature_index] != mp_id)
        fail("asymmetric observation: point " + std::to_string(mp_id) +
             " vs keyframe " + std::to_string(kf_id));
    }
  }
  for (const auto& [kf_id, kf] : keyframes_) {
    for (int i = 0; i < static_cast<int>(kf->map_point_of_feature.size());
         ++i) {
      const Id mp_id = kf->map_point_of_feature[i];
      if (mp_id == kInvalidId) continue;
      const MapPoint* mp = mapPoint(mp_id);
      if (!mp || !mp->observations.count(kf_id) ||
          mp->observations.at(kf_id) != i)
        fail("asymmetric observation: keyframe " + std::to_string(kf_id) +
             " feature " + std::to_string(i));
    }
  }

  // Covisibility weights must equal the recomputed shared counts.
  for (const auto& [kf_id, kf] : keyframes_) {
    for (const auto& [other_id, weight] : kf->covisibility) {
      const KeyFrame* other = keyframe(other_id);
      if (!other) {
        fail("covisibility edge to missing keyframe");
        continue;
      }
      const int actual = sharedObservations(*kf, *other);
      if (actual != weight)
        fail("covisibility weight mismatch " + std::to_string(kf_id) + "<->" +
             std::to_string(other_id) + ": stored " + std::to_string(weight) +
             ", actual " + std::to_string(actual));
    }
  }

  // Spanning tree: every non-origin keyframe has a live parent; walking
  // parents must terminate at the root (acyclic).
  for (const auto& [kf_id, kf] : keyframes_) {
    if (kf_id == firstKeyFrameId()) continue;
    if (kf->parent == kInvalidId) {
      fail("keyframe " + std::to_string(kf_id) + " has no parent");
      continue;
    }
    std::set<Id> seen;
    Id cursor = kf_id;
    while (cursor != kInvalidId) {
      if (!seen.insert(cursor).second) {
        fail("spanning-tree cycle at keyframe " + std::to_string(kf_id));
        break;
      }
      const KeyFrame* node = keyframe(cursor);
      if (!node) {
        fail("spanning-tree parent missing for keyframe " +
             std::to_string(kf_id));
        break;
      }
      cursor = node->parent;
    }
  }
  return report;
}

Id WorldMap::firstKeyFrameId() const {
  return keyframes_.empty() ? kInvalidId : keyframes_.begin()->first;
}

}  // namespace hyslam
