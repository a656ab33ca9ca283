#pragma once

#include <string>
#include <vector>

#include "hyslam/features/feature.hpp"

namespace hyslam {

// Binary feature file. Layout (little endian):
//   magic   "HYFT" (4 bytes)
//   version uint32 (currently 1)
//   count   uint32
//   dim     uint32 (must be 128)
// then per feature:
//   u, v, scale_sigma, orientation, right_u   float64 each
//   descriptor                                float32 x 128
// right_u < 0 means no stereo match. Descriptors are renormalized on load;
// a deviation above 1e-3 is reported through `renormalized_warnings`.
// Throws ParseError (with byte offset) / DimensionMismatch.
std::vector<Feature> loadFeatures(const std::string& path,
                                  int* renormalized_warnings = nullptr);

void saveFeatures(const std::vector<Feature>& features,
                  const std::string& path);

}  // namespace hyslam
