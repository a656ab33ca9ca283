#pragma once

#include <stdexcept>
#include <string>

namespace hyslam {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidCalibration : std::runtime_error {
  InvalidCalibration(const std::string& key, const std::string& why)
      : std::runtime_error("invalid calibration: " + key + ": " + why),
        offending_key(key) {}
  std::string offending_key;
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace hyslam
