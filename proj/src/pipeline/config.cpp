#include "hyslam/pipeline/config.hpp"

#include <fstream>
#include <sstream>

#include "hyslam/io/errors.hpp"

namespace hyslam {

void PipelineConfig::validate() const {
  if (max_features <= 0) throw InvalidConfig("max_features must be positive");
  if (init_fraction <= 0.0 || init_fraction >= 1.0)
    throw InvalidConfig("init_fraction must be in (0, 1)");
  if (min_matches_track < 3 || min_matches_bow < 3 || min_matches_local < 3)
    throw InvalidConfig("minimum match counts must be at least 3");
  if (keyframe_tracked_ratio <= 0.0 || keyframe_tracked_ratio > 1.0)
    throw InvalidConfig("keyframe_tracked_ratio must be in (0, 1]");
  if (keyframe_max_gap < 1) throw InvalidConfig("keyframe_max_gap must be >= 1");
  if (window_radius <= 0.0) throw InvalidConfig("window_radius must be positive");
  if (loop_min_inliers < 6)
    throw InvalidConfig("loop_min_inliers must be at least 6");
  if (loop_consistency < 1)
    throw InvalidConfig("loop_consistency must be at least 1");
  if (vocab_branching < 2 || vocab_depth < 1)
    throw InvalidConfig("vocabulary needs branching >= 2 and depth >= 1");
}

PipelineConfig parsePipelineConfig(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    std::string value;
    if (!(fields >> value))
      throw ParseError("pipeline config line " + std::to_string(line_number) +
                       ": missing value for " + key);

    try {
      if (key == "max_features") config.max_features = std::stoi(value);
      else if (key == "init_fraction") config.init_fraction = std::stod(value);
      else if (key == "min_matches_track")
        config.min_matches_track = std::stoi(value);
      else if (key == "min_matches_bow")
        config.min_matches_bow = std::stoi(value);
      else if (key == "min_matches_local")
        config.min_matches_local = std::stoi(value);
      else if (key == "keyframe_tracked_ratio")
        config.keyframe_tracked_ratio = std::stod(value);
      else if (key == "keyframe_max_gap")
        config.keyframe_max_gap = std::stoi(value);
      else if (key == "keyframe_min_tracked")
        config.keyframe_min_tracked = std::stoi(value);
      else if (key == "window_radius") config.window_radius = std::stod(value);
      else if (key == "loop_min_inliers")
        config.loop_min_inliers = std::stoi(value);
      else if (key == "loop_consistency")
        config.loop_consistency = std::stoi(value);
      else if (key == "vocab_branching")
        config.vocab_branching = std::stoi(value);
      else if (key == "vocab_depth") config.vocab_depth = std::stoi(value);
      else if (key == "vocabulary_path") config.vocabulary_path = value;
      else if (key == "hybrid") config.hybrid = value == "true" || value == "1";
      else if (key == "deterministic")
        config.deterministic = value == "true" || value == "1";
      else if (key == "seed")
        config.seed = static_cast<std::uint32_t>(std::stoul(value));
      else
        throw ParseError("pipeline config line " +
                         std::to_string(line_number) + ": unknown key " + key);
    } catch (const std::invalid_argument&) {
      throw ParseError("pipeline config line " + std::to_string(line_number) +
                       ": bad value for " + key);
    }
  }
  config.validate();
  return config;
}

PipelineConfig loadPipelineConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open pipeline config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parsePipelineConfig(buffer.str());
}

}  // namespace hyslam
