#include "hyslam/io/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyslam/io/errors.hpp"

namespace hyslam {
namespace {

namespace fs = std::filesystem;

std::string resolve(const fs::path& base, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p.string();
  return (base / p).lexically_normal().string();
}

void requireExists(const std::string& path, int line_number) {
  if (!fs::exists(path))
    throw ParseError("manifest line " + std::to_string(line_number) +
                     ": referenced file does not exist: " + path);
}

}  // namespace

SequenceManifest loadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();

  SequenceManifest manifest;
  std::string line;
  int line_number = 0;
  double last_ts = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;

    if (tag == "frame") {
      FrameRecord record;
      std::string kind, feature_path;
      if (!(ls >> record.timestamp >> kind >> feature_path))
        throw ParseError("manifest line " + std::to_string(line_number) +
                         ": expected 'frame <ts> <kind> <path>'");
      if (kind == "stereo") {
        record.kind = CameraKind::kStereo;
      } else if (kind == "fisheye") {
        record.kind = CameraKind::kFisheye;
      } else {
        throw ParseError("manifest line " + std::to_string(line_number) +
                         ": unknown frame kind: " + kind);
      }
      if (record.timestamp < last_ts)
        throw ParseError("manifest line " + std::to_string(line_number) +
                         ": timestamps must be non-decreasing");
      last_ts = record.timestamp;
      record.feature_path = resolve(base, feature_path);
      requireExists(record.feature_path, line_number);
      manifest.frames.push_back(std::move(record));
      continue;
    }

    std::string value;
    if (!(ls >> value))
      throw ParseError("manifest line " + std::to_string(line_number) +
                       ": key without value");
    const std::string resolved = resolve(base, value);
    if (tag == "calib_stereo") {
      manifest.stereo_calibration_path = resolved;
    } else if (tag == "calib_fisheye") {
      manifest.fisheye_calibration_path = resolved;
    } else if (tag == "ground_truth_stereo") {
      manifest.ground_truth_stereo_path = resolved;
    } else if (tag == "ground_truth_fisheye") {
      manifest.ground_truth_fisheye_path = resolved;
    } else {
      throw ParseError("manifest line " + std::to_string(line_number) +
                       ": unknown key: " + tag);
    }
    requireExists(resolved, line_number);
  }
  return manifest;
}

void saveManifest(const SequenceManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write manifest: " + path);
  out.precision(17);
  if (!manifest.stereo_calibration_path.empty())
    out << "calib_stereo " << manifest.stereo_calibration_path << "\n";
  if (!manifest.fisheye_calibration_path.empty())
    out << "calib_fisheye " << manifest.fisheye_calibration_path << "\n";
  if (!manifest.ground_truth_stereo_path.empty())
    out << "ground_truth_stereo " << manifest.ground_truth_stereo_path << "\n";
  if (!manifest.ground_truth_fisheye_path.empty())
    out << "ground_truth_fisheye " << manifest.ground_truth_fisheye_path
        << "\n";
  for (const auto& f : manifest.frames) {
    out << "frame " << f.timestamp << ' '
        << (f.kind == CameraKind::kStereo ? "stereo" : "fisheye") << ' '
        << f.feature_path << "\n";
  }
}

}  // namespace hyslam
