#pragma once

#include <atomic>
#include <set>
#include <vector>

#include "hyslam/bow/keyframe_database.hpp"
#include "hyslam/map/world_map.hpp"
#include "hyslam/pipeline/config.hpp"

namespace hyslam {

struct LoopEvent {
  bool detected = false;
  bool closed = false;
  Id keyframe = kInvalidId;       // the querying keyframe
  Id loop_keyframe = kInvalidId;  // the matched older keyframe
  Pose corrected_pose;            // world -> camera after correction
  int inliers = 0;
};

// Loop detection (BoW candidates, temporal consistency, MLPnP geometric
// verification) and loop correction (SE(3) propagation to the covisibility
// group, point fusion, loop edge). The full bundle adjustment is exposed
// separately so the caller controls its threading.
class LoopCloser {
 public:
  LoopCloser(WorldMap* map, KeyFrameDatabase* database,
             const PipelineConfig& config);

  // Runs detection for a freshly processed keyframe; on a verified loop
  // applies the correction and returns the event with closed = true.
  LoopEvent onKeyFrame(Id keyframe_id);

  // Global bundle adjustment over every keyframe (origin fixed) followed
  // by spanning-tree propagation of the corrections. Honors `abort`.
  bool fullBundleAdjust(const std::atomic<bool>* abort = nullptr);

 private:
  struct ConsistencyGroup {
    std::set<Id> keyframes;
    int count = 0;
  };

  void closeLoop(KeyFrame& current, KeyFrame& loop_kf,
                 const Pose& corrected_pose,
                 const std::vector<std::pair<int, Id>>& feature_to_loop_point);

  WorldMap* map_;
  KeyFrameDatabase* database_;
  PipelineConfig config_;
  std::vector<ConsistencyGroup> consistent_groups_;
};

}  // namespace hyslam
