#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "hyslam/geometry/trajectory.hpp"
#include "hyslam/pipeline/local_mapper.hpp"
#include "hyslam/pipeline/loop_closer.hpp"
#include "hyslam/pipeline/tracker.hpp"

namespace hyslam {

struct FrameInput {
  double timestamp = 0.0;
  CameraKind kind = CameraKind::kStereo;
  std::vector<Feature> features;
};

struct RunStats {
  int stereo_frames = 0;
  int stereo_tracked = 0;
  int fisheye_frames = 0;
  int fisheye_registered = 0;
  int keyframes = 0;
  int map_points = 0;
  int loop_closures = 0;
  double mean_tracking_ms = 0.0;
};

// The full pipeline: tracking front end plus the local-mapping and
// loop-closing back end. In deterministic mode every stage runs inline on
// the caller's thread in a fixed order; otherwise keyframes are handed to
// a background mapping worker and the full bundle adjustment runs on its
// own thread.
class System {
 public:
  explicit System(const PipelineConfig& config);
  ~System();

  // Must be called before feeding frames of the matching kind.
  void setCameras(CameraPtr stereo, CameraPtr fisheye);

  void feed(const FrameInput& input);

  // Drains the background workers (no-op in deterministic mode).
  void finish();

  // Per-frame poses as estimated live by the tracker.
  Trajectory trackingTrajectory(CameraKind kind) const;
  // Per-frame poses re-anchored on the final optimized keyframe poses.
  Trajectory finalTrajectory(CameraKind kind) const;

  WorldMap& map() { return map_; }
  const WorldMap& map() const { return map_; }
  const Vocabulary* vocabulary() const {
    return vocabulary_ ? vocabulary_.get() : nullptr;
  }
  RunStats stats() const;
  const TrackingState& trackingState() const { return tracker_.state(); }

 private:
  struct FrameTrace {
    double timestamp = 0.0;
    CameraKind kind = CameraKind::kStereo;
    bool tracked = false;
    Pose live_pose;        // world -> camera at track time
    Id reference = kInvalidId;
    Pose relative_to_reference;  // live_pose * reference_pose_at_track^-1
  };

  void maybeTrainVocabulary(const FrameInput& input);
  void handleKeyFrame(Id keyframe_id);
  void processKeyFrame(Id keyframe_id);
  void mappingWorker();
  void launchFullBa();

  PipelineConfig config_;
  WorldMap map_;
  KeyFrameDatabase database_;
  std::unique_ptr<Vocabulary> vocabulary_;
  std::vector<Descriptor> vocab_corpus_;
  Tracker tracker_;
  LocalMapper mapper_;
  LoopCloser closer_;

  CameraPtr stereo_camera_;
  CameraPtr fisheye_camera_;

  std::vector<FrameTrace> traces_;
  Id next_frame_index_ = 0;
  RunStats stats_;
  double tracking_ms_total_ = 0.0;
  int tracking_calls_ = 0;

  // Threaded mode state.
  std::thread mapping_thread_;
  std::deque<Id> mapping_queue_;
  mutable std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  bool stop_worker_ = false;
  bool worker_busy_ = false;
  std::thread full_ba_thread_;
  std::atomic<bool> full_ba_abort_{false};
};

}  // namespace hyslam
