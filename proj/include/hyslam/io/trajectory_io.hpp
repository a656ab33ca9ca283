#pragma once

#include <string>

#include "hyslam/geometry/trajectory.hpp"

namespace hyslam {

// TUM-style text trajectory: one pose per line,
// "timestamp tx ty tz qx qy qz qw", '#' comment lines ignored.
// Quaternions are normalized on read. Throws ParseError with line number.
Trajectory readTrajectory(const std::string& path);
Trajectory parseTrajectory(const std::string& text);

void writeTrajectory(const Trajectory& trajectory, const std::string& path);

}  // namespace hyslam
