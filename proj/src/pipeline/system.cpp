#include "hyslam/pipeline/system.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <shared_mutex>

namespace hyslam {

System::System(const PipelineConfig& config)
    : config_(config),
      tracker_(&map_, &database_, config),
      mapper_(&map_, &database_, config),
      closer_(&map_, &database_, config) {
  config_.validate();
  if (!config_.vocabulary_path.empty()) {
    vocabulary_ =
        std::make_unique<Vocabulary>(Vocabulary::load(config_.vocabulary_path));
    tracker_.setVocabulary(vocabulary_.get());
    mapper_.setVocabulary(vocabulary_.get());
  }
  if (!config_.deterministic)
    mapping_thread_ = std::thread(&System::mappingWorker, this);
}

System::~System() {
  finish();
  {
    std::lock_guard lock(queue_mutex_);
    stop_worker_ = true;
  }
  queue_cv_.notify_all();
  if (mapping_thread_.joinable()) mapping_thread_.join();
}

void System::setCameras(CameraPtr stereo, CameraPtr fisheye) {
  stereo_camera_ = std::move(stereo);
  fisheye_camera_ = std::move(fisheye);
}

void System::maybeTrainVocabulary(const FrameInput& input) {
  if (vocabulary_) return;
  for (const Feature& f : input.features) vocab_corpus_.push_back(f.descriptor);
  const double needed =
      std::pow(static_cast<double>(config_.vocab_branching), config_.vocab_depth);
  if (static_cast<double>(vocab_corpus_.size()) < needed) return;

  vocabulary_ = std::make_unique<Vocabulary>(
      Vocabulary::train(vocab_corpus_, config_.vocab_branching,
                        config_.vocab_depth, config_.seed));
  vocab_corpus_.clear();
  vocab_corpus_.shrink_to_fit();
  tracker_.setVocabulary(vocabulary_.get());
  mapper_.setVocabulary(vocabulary_.get());

  // Backfill BoW vectors for keyframes inserted before training finished.
  std::unique_lock lock(map_.mutex());
  for (Id kf_id : map_.keyframeIds()) {
    KeyFrame* kf = map_.keyframe(kf_id);
    if (!kf->bow.empty()) continue;
    std::vector<Descriptor> descriptors;
    descriptors.reserve(kf->features.size());
    for (const Feature& f : kf->features) descriptors.push_back(f.descriptor);
    vocabulary_->transform(descriptors, &kf->bow, &kf->feature_groups);
    database_.add(kf_id, kf->bow);
  }
}

void System::feed(const FrameInput& input) {
  Frame frame;
  frame.index = next_frame_index_++;
  frame.timestamp = input.timestamp;
  frame.kind = input.kind;
  frame.camera =
      input.kind == CameraKind::kStereo ? stereo_camera_ : fisheye_camera_;
  frame.features = input.features;
  if (static_cast<int>(frame.features.size()) > config_.max_features)
    frame.features.resize(config_.max_features);

  maybeTrainVocabulary(input);

  const auto start = std::chrono::steady_clock::now();
  const TrackOutcome outcome = input.kind == CameraKind::kStereo
                                   ? tracker_.processStereo(std::move(frame))
                                   : tracker_.processFisheye(std::move(frame));
  const auto end = std::chrono::steady_clock::now();
  tracking_ms_total_ +=
      std::chrono::duration<double, std::milli>(end - start).count();
  ++tracking_calls_;

  FrameTrace trace;
  trace.timestamp = input.timestamp;
  trace.kind = input.kind;
  trace.tracked = outcome.tracked;
  if (outcome.tracked) {
    trace.live_pose = outcome.pose;
    trace.reference = input.kind == CameraKind::kStereo
                          ? tracker_.state().reference_stereo
                          : tracker_.state().reference_fisheye;
    if (trace.reference == kInvalidId)
      trace.reference = tracker_.state().reference_stereo;
    std::shared_lock lock(map_.mutex());
    if (const KeyFrame* ref = map_.keyframe(trace.reference))
      trace.relative_to_reference = outcome.pose.compose(ref->pose.inverse());
    else
      trace.reference = kInvalidId;
  }
  traces_.push_back(trace);

  if (input.kind == CameraKind::kStereo) {
    ++stats_.stereo_frames;
    if (outcome.tracked) ++stats_.stereo_tracked;
  } else {
    ++stats_.fisheye_frames;
    if (outcome.tracked) ++stats_.fisheye_registered;
  }

  if (outcome.keyframe_id != kInvalidId) handleKeyFrame(outcome.keyframe_id);
}

void System::handleKeyFrame(Id keyframe_id) {
  if (config_.deterministic) {
    processKeyFrame(keyframe_id);
    return;
  }
  {
    std::lock_guard lock(queue_mutex_);
    mapping_queue_.push_back(keyframe_id);
  }
  queue_cv_.notify_one();
}

void System::processKeyFrame(Id keyframe_id) {
  std::set<Id> protected_keyframes;
  if (tracker_.state().reference_stereo != kInvalidId)
    protected_keyframes.insert(tracker_.state().reference_stereo);
  if (tracker_.state().reference_fisheye != kInvalidId)
    protected_keyframes.insert(tracker_.state().reference_fisheye);

  mapper_.process(keyframe_id, protected_keyframes);

  const LoopEvent loop = closer_.onKeyFrame(keyframe_id);
  if (loop.closed) {
    ++stats_.loop_closures;
    if (config_.deterministic) {
      closer_.fullBundleAdjust();
    } else {
      launchFullBa();
    }
  }
}

void System::launchFullBa() {
  if (full_ba_thread_.joinable()) {
    full_ba_abort_ = true;
    full_ba_thread_.join();
  }
  full_ba_abort_ = false;
  full_ba_thread_ = std::thread([this] { closer_.fullBundleAdjust(&full_ba_abort_); });
}

void System::mappingWorker() {
  for (;;) {
    Id keyframe_id = kInvalidId;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock,
                     [this] { return stop_worker_ || !mapping_queue_.empty(); });
      if (mapping_queue_.empty()) {
        if (stop_worker_) return;
        continue;
      }
      keyframe_id = mapping_queue_.front();
      mapping_queue_.pop_front();
      worker_busy_ = true;
    }
    processKeyFrame(keyframe_id);
    {
      std::lock_guard lock(queue_mutex_);
      worker_busy_ = false;
    }
    queue_cv_.notify_all();
  }
}

void System::finish() {
  if (!config_.deterministic) {
    std::unique_lock lock(queue_mutex_);
    queue_cv_.wait(
        lock, [this] { return mapping_queue_.empty() && !worker_busy_; });
    lock.unlock();
  }
  if (full_ba_thread_.joinable()) full_ba_thread_.join();
}

Trajectory System::trackingTrajectory(CameraKind kind) const {
  Trajectory trajectory;
  for (const FrameTrace& trace : traces_) {
    if (trace.kind != kind || !trace.tracked) continue;
    trajectory.push(trace.timestamp, trace.live_pose.inverse());
  }
  return trajectory;
}

Trajectory System::finalTrajectory(CameraKind kind) const {
  Trajectory trajectory;
  std::shared_lock lock(map_.mutex());
  for (const FrameTrace& trace : traces_) {
    if (trace.kind != kind || !trace.tracked) continue;
    Pose pose = trace.live_pose;
    if (trace.reference != kInvalidId) {
      if (const KeyFrame* ref = map_.keyframe(trace.reference))
        pose = trace.relative_to_reference.compose(ref->pose);
    }
    trajectory.push(trace.timestamp, pose.inverse());
  }
  return trajectory;
}

RunStats System::stats() const {
  RunStats out = stats_;
  out.keyframes = static_cast<int>(map_.keyframeCount());
  out.map_points = static_cast<int>(map_.mapPointCount());
  out.mean_tracking_ms =
      tracking_calls_ > 0 ? tracking_ms_total_ / tracking_calls_ : 0.0;
  return out;
}

}  // namespace hyslam
