#pragma once

#include <string>

#include "hyslam/map/world_map.hpp"

namespace hyslam {

// Versioned text dump of the map graph:
//   hyslam_map 1
//   keyframe <id> <stereo|fisheye> <timestamp> <parent> qw qx qy qz tx ty tz
//   point <id> <x> <y> <z> <n_obs> (<keyframe> <feature>)...
// Poses are world -> camera. The caller holds the map lock.
void saveMapDump(const WorldMap& map, const std::string& path);

}  // namespace hyslam
