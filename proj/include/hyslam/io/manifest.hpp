#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyslam/camera/camera.hpp"

namespace hyslam {

struct FrameRecord {
  double timestamp = 0.0;
  CameraKind kind = CameraKind::kStereo;
  std::string feature_path;  // stereo features carry right_u inline
};

// Sequence description, one frame record per line:
//   calib_stereo <path>
//   calib_fisheye <path>
//   ground_truth_stereo <path>       (optional)
//   ground_truth_fisheye <path>      (optional)
//   frame <timestamp> stereo|fisheye <feature file>
// Relative paths are resolved against the manifest directory.
struct SequenceManifest {
  std::string stereo_calibration_path;
  std::string fisheye_calibration_path;
  std::string ground_truth_stereo_path;
  std::string ground_truth_fisheye_path;
  std::vector<FrameRecord> frames;
};

// Throws ParseError on malformed records, missing referenced files, or
// decreasing timestamps.
SequenceManifest loadManifest(const std::string& path);

void saveManifest(const SequenceManifest& manifest, const std::string& path);

}  // namespace hyslam
