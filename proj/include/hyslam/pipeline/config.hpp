#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyslam {

struct InvalidConfig : std::runtime_error {
  explicit InvalidConfig(const std::string& why)
      : std::runtime_error("invalid pipeline config: " + why) {}
};

// Front-end and mapping thresholds. Loaded from a key-value document whose
// keys match the field names below.
struct PipelineConfig {
  int max_features = 4000;        // feature budget N per frame
  double init_fraction = 0.08;    // of N, to accept the first keyframe

  // Minimum accepted matches per tracking stage.
  int min_matches_track = 20;   // motion-model / pose-only stage
  int min_matches_bow = 15;     // reference-keyframe fallback
  int min_matches_local = 30;   // after local-window expansion

  // Keyframe decision.
  double keyframe_tracked_ratio = 0.9;  // of the reference keyframe
  int keyframe_max_gap = 5;             // frames of the same kind
  int keyframe_min_tracked = 50;

  double window_radius = 15.0;  // px, projection-window matching

  // Loop closing.
  int loop_min_inliers = 20;
  int loop_consistency = 3;

  // Vocabulary trained on the fly when no file is supplied.
  int vocab_branching = 10;
  int vocab_depth = 3;
  std::string vocabulary_path;

  bool hybrid = false;
  bool deterministic = true;
  std::uint32_t seed = 42;

  void validate() const;
};

// One `key value` pair per line, '#' comments. Unknown keys are rejected.
PipelineConfig parsePipelineConfig(const std::string& text);
PipelineConfig loadPipelineConfig(const std::string& path);

}  // namespace hyslam
