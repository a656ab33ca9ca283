#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyslam/map/keyframe.hpp"
#include "hyslam/map/map_point.hpp"

namespace hyslam {

struct LocalWindow {
  std::vector<Id> local_keyframes;  // K_L: keyframe + covisibility neighbors
  std::vector<Id> fixed_keyframes;  // K_F: other observers of P_L
  std::vector<Id> points;           // P_L
};

struct CullResult {
  int points_removed = 0;
  int keyframes_removed = 0;
};

struct AuditReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// The shared optimized map. Thread contract: callers serialize access via
// mutex() — tracking takes shared locks, local mapping / loop closing take
// exclusive locks. Methods themselves do not lock. Every structural
// mutation bumps the version counter.
class WorldMap {
 public:
  // Covisibility edges require at least this many shared observations.
  int covisibility_threshold = 15;
  // Neighbor cap for the local bundle adjustment window.
  int local_window_cap = 20;

  std::shared_mutex& mutex() const { return mutex_; }

  std::uint64_t version() const { return version_; }

  // --- registries -------------------------------------------------------
  KeyFrame* keyframe(Id id);
  const KeyFrame* keyframe(Id id) const;
  MapPoint* mapPoint(Id id);
  const MapPoint* mapPoint(Id id) const;
  std::vector<Id> keyframeIds() const;  // ascending
  std::vector<Id> mapPointIds() const;  // ascending
  std::size_t keyframeCount() const { return keyframes_.size(); }
  std::size_t mapPointCount() const { return map_points_.size(); }

  // --- construction -----------------------------------------------------
  // Registers a keyframe snapshot: records observations on the referenced
  // map points, recomputes covisibility, and attaches the spanning-tree
  // parent (max-weight neighbor; the first keyframe has none).
  Id insertKeyFrame(KeyFrame snapshot);

  Id createMapPoint(MapPoint point);

  void addObservation(Id point_id, Id keyframe_id, int feature_index);
  void eraseObservation(Id point_id, Id keyframe_id);
  void removeMapPoint(Id point_id);

  // Merges `duplicate` into `kept`: observations move over (keyframes
  // already observing `kept` keep that link) and `duplicate` is removed.
  void fuseMapPoints(Id kept, Id duplicate);

  // --- maintenance ------------------------------------------------------
  void updateCovisibility(Id keyframe_id);

  // Refreshes the representative descriptor, the viewing normal, and the
  // distance bounds from the current observations.
  void refreshMapPointStatistics(Id point_id);

  LocalWindow localWindow(Id keyframe_id) const;

  // Applies full-BA pose corrections: keyframes absent from `optimized`
  // inherit their parent's corrective transform through the spanning tree;
  // points follow their reference keyframe.
  void propagateSpanningTree(
      const std::unordered_map<Id, Pose>& optimized_poses,
      const std::unordered_map<Id, Eigen::Vector3d>& optimized_points);

  // Map hygiene. Recent points must earn a found/visible ratio >= 0.25 and
  // three observers within the grace period; keyframes whose points are
  // >= 90% redundant are removed. Keyframe 0 and `protected_keyframes`
  // are never removed.
  CullResult cull(const std::set<Id>& protected_keyframes);

  // Structural invariants: bidirectional observations, exact covisibility
  // weights, spanning-tree shape.
  AuditReport audit() const;

  // Covisibility edges at or above the threshold, sorted by descending
  // weight.
  std::vector<std::pair<int, Id>> covisibleNeighbors(const KeyFrame& kf) const;

  Id firstKeyFrameId() const;

  void bumpVersion() { ++version_; }

 private:
  void removeKeyFrame(Id keyframe_id);
  void adjustCovisibility(const MapPoint& point, Id keyframe_id, int delta);
  int sharedObservations(const KeyFrame& a, const KeyFrame& b) const;

  std::map<Id, std::unique_ptr<KeyFrame>> keyframes_;
  std::map<Id, std::unique_ptr<MapPoint>> map_points_;
  std::deque<Id> recent_points_;
  Id next_keyframe_id_ = 0;
  Id next_point_id_ = 0;
  std::uint64_t version_ = 0;
  mutable std::shared_mutex mutex_;
};

}  // namespace hyslam
