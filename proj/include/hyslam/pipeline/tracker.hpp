#pragma once

#include <optional>
#include <set>
#include <string>

#include "hyslam/bow/keyframe_database.hpp"
#include "hyslam/bow/vocabulary.hpp"
#include "hyslam/map/world_map.hpp"
#include "hyslam/pipeline/config.hpp"
#include "hyslam/pipeline/frame.hpp"

namespace hyslam {

enum class TrackingMode {
  kUninitialized,
  kTracking,
  kLostStereo,
  kLostFisheyeOnly,
};

struct TrackingState {
  TrackingMode mode = TrackingMode::kUninitialized;
  Id reference_stereo = kInvalidId;   // K_s
  Id reference_fisheye = kInvalidId;  // K_f
  std::optional<Frame> last_stereo;
  std::optional<Frame> last_fisheye;
  Pose last_motion;  // previous-to-current stereo motion
  int frames_since_stereo_keyframe = 0;
  int frames_since_fisheye_keyframe = 0;
};

struct TrackOutcome {
  bool tracked = false;
  Pose pose;                  // world -> camera, valid when tracked
  int matches = 0;            // inlier map point associations
  Id keyframe_id = kInvalidId;  // set when this frame became a keyframe
  std::string stage;          // which cascade stage produced the pose
};

// Frame-rate front end: initialization from the first well-featured stereo
// frame, the stereo tracking cascade, fisheye registration against the
// shared map, keyframe decision, and relocalization. Takes the map mutex
// itself (shared for queries, exclusive for keyframe insertion and map
// point statistics).
class Tracker {
 public:
  Tracker(WorldMap* map, KeyFrameDatabase* database,
          const PipelineConfig& config);

  // Non-null once the vocabulary exists; BoW-dependent stages are skipped
  // while it is null.
  void setVocabulary(const Vocabulary* vocabulary);

  TrackOutcome processStereo(Frame frame);

  // Requires the paired stereo frame to be tracked first; an unregistered
  // fisheye frame leaves the map untouched.
  TrackOutcome processFisheye(Frame frame);

  const TrackingState& state() const { return state_; }

 private:
  struct MatchSet {
    std::vector<Id> point_of_feature;  // per frame feature
    int count = 0;
  };

  TrackOutcome initialize(Frame& frame);
  bool trackWithMotionModel(Frame& frame, const Pose& seed, MatchSet* matches);
  bool trackReferenceKeyFrame(Frame& frame, Id reference, const Pose& seed,
                              MatchSet* matches);
  bool expandLocalWindow(Frame& frame, Id reference, MatchSet* matches);
  bool optimizeFrame(Frame& frame, MatchSet* matches, int min_inliers);
  bool relocalize(Frame& frame, MatchSet* matches);
  bool needNewKeyFrame(const Frame& frame, Id reference, int gap_frames) const;
  Id insertKeyFrame(const Frame& frame);
  void updateReference(const Frame& frame, Id* reference);
  void recordPointStats(const std::vector<Id>& visible,
                        const std::vector<Id>& found);

  WorldMap* map_;
  KeyFrameDatabase* database_;
  const Vocabulary* vocabulary_ = nullptr;
  PipelineConfig config_;
  TrackingState state_;
  // Map points offered as candidates during the current frame, for the
  // found/visible culling statistics.
  std::set<Id> visible_this_frame_;
};

}  // namespace hyslam
