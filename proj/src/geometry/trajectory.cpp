#include "hyslam/geometry/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace hyslam {

std::vector<std::pair<std::size_t, std::size_t>> associateByTimestamp(
    const Trajectory& estimate, const Trajectory& reference,
    double tolerance) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (estimate.empty() || reference.empty()) return pairs;
  std::size_t j = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double ts = estimate.poses[i].timestamp;
    while (j + 1 < reference.size() &&
           std::abs(reference.poses[j + 1].timestamp - ts) <=
               std::abs(reference.poses[j].timestamp - ts)) {
      ++j;
    }
    if (std::abs(reference.poses[j].timestamp - ts) <= tolerance)
      pairs.emplace_back(i, j);
  }
  return pairs;
}

}  // namespace hyslam
