#pragma once

#include <set>

#include "hyslam/bow/keyframe_database.hpp"
#include "hyslam/bow/vocabulary.hpp"
#include "hyslam/map/world_map.hpp"
#include "hyslam/pipeline/config.hpp"

namespace hyslam {

struct MappingStats {
  int new_points = 0;
  int culled_points = 0;
  int culled_keyframes = 0;
  bool local_ba_ran = false;
};

// Back-end keyframe processing: BoW registration, new map point creation
// (direct stereo triangulation plus two-view triangulation against
// covisible neighbors), map hygiene, and the local bundle adjustment.
// Mutates the map under its exclusive lock.
class LocalMapper {
 public:
  LocalMapper(WorldMap* map, KeyFrameDatabase* database,
              const PipelineConfig& config);

  void setVocabulary(const Vocabulary* vocabulary);

  MappingStats process(Id keyframe_id, const std::set<Id>& protected_keyframes);

 private:
  int createStereoPoints(Id keyframe_id);
  int createTwoViewPoints(Id keyframe_id);
  bool localBundleAdjust(Id keyframe_id);

  WorldMap* map_;
  KeyFrameDatabase* database_;
  const Vocabulary* vocabulary_ = nullptr;
  PipelineConfig config_;
};

}  // namespace hyslam
