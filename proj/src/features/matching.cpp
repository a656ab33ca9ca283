#include "hyslam/features/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hyslam {
namespace {

struct NearestTwo {
  int best = -1;
  float d1 = std::numeric_limits<float>::max();
  float d2 = std::numeric_limits<float>::max();
};

NearestTwo nearestTwo(const Feature& query, const std::vector<Feature>& pool,
                      double row_tolerance, double query_v) {
  NearestTwo out;
  for (int j = 0; j < static_cast<int>(pool.size()); ++j) {
    if (row_tolerance >= 0.0 &&
        std::abs(pool[j].v - query_v) > row_tolerance)
      continue;
    const float d = descriptorDistance(query.descriptor, pool[j].descriptor);
    if (d < out.d1) {
      out.d2 = out.d1;
      out.d1 = d;
      out.best = j;
    } else if (d < out.d2) {
      out.d2 = d;
    }
  }
  return out;
}

// Plain nearest-neighbor index map a -> b, with an optional epipolar gate
// and an absolute descriptor-distance gate. Without the latter, features
// with no true counterpart (spurious detections) still pair up somewhere,
// and in high dimensions two random descriptors are mutual nearest
// neighbors often enough to slip through cycle-consistency checks.
std::vector<int> nearestMap(const std::vector<Feature>& a,
                            const std::vector<Feature>& b,
                            double row_tolerance, double max_distance) {
  std::vector<int> map(a.size(), -1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const NearestTwo nn = nearestTwo(a[i], b, row_tolerance, a[i].v);
    if (nn.best >= 0 && nn.d1 <= max_distance) map[i] = nn.best;
  }
  return map;
}

}  // namespace

std::vector<MatchPair> matchBruteForce(const std::vector<Feature>& a,
                                       const std::vector<Feature>& b,
                                       const BruteForceOptions& options) {
  std::vector<MatchPair> matches;
  if (a.empty() || b.empty()) return matches;
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    const NearestTwo nn =
        nearestTwo(a[i], b, options.row_tolerance, a[i].v);
    if (nn.best < 0) continue;
    if (options.ratio < 1.0 && nn.d2 < std::numeric_limits<float>::max() &&
        nn.d1 >= options.ratio * nn.d2)
      continue;
    if (options.mutual_check) {
      const NearestTwo back =
          nearestTwo(b[nn.best], a, options.row_tolerance, b[nn.best].v);
      if (back.best != i) continue;
    }
    matches.push_back({i, nn.best, nn.d1});
  }
  return matches;
}

std::vector<CircularTrack> matchCircular(const std::vector<Feature>& prev_left,
                                         const std::vector<Feature>& prev_right,
                                         const std::vector<Feature>& cur_right,
                                         const std::vector<Feature>& cur_left,
                                         double epipolar_tolerance,
                                         double max_distance) {
  std::vector<CircularTrack> tracks;
  if (prev_left.empty() || prev_right.empty() || cur_right.empty() ||
      cur_left.empty())
    return tracks;

  const auto pl_pr =
      nearestMap(prev_left, prev_right, epipolar_tolerance, max_distance);
  const auto pr_cr = nearestMap(prev_right, cur_right, -1.0, max_distance);
  const auto cr_cl =
      nearestMap(cur_right, cur_left, epipolar_tolerance, max_distance);
  const auto cl_pl = nearestMap(cur_left, prev_left, -1.0, max_distance);

  for (int i = 0; i < static_cast<int>(prev_left.size()); ++i) {
    const int j = pl_pr[i];
    if (j < 0) continue;
    const int k = pr_cr[j];
    if (k < 0) continue;
    const int l = cr_cl[k];
    if (l < 0) continue;
    if (cl_pl[l] != i) continue;
    // Both stereo pairs must satisfy the rectified row constraint.
    if (std::abs(prev_left[i].v - prev_right[j].v) > epipolar_tolerance)
      continue;
    if (std::abs(cur_left[l].v - cur_right[k].v) > epipolar_tolerance)
      continue;
    tracks.push_back({i, j, k, l});
  }
  return tracks;
}

std::vector<MatchPair> matchProjectionWindow(
    const std::vector<ProjectedPoint>& projected,
    const std::vector<Feature>& features, const WindowMatchOptions& options) {
  std::vector<MatchPair> matches;
  const double log_factor = std::log(kScaleLevelFactor);
  for (int i = 0; i < static_cast<int>(projected.size()); ++i) {
    const auto& point = projected[i];
    int best = -1;
    float d1 = std::numeric_limits<float>::max();
    float d2 = std::numeric_limits<float>::max();
    for (int j = 0; j < static_cast<int>(features.size()); ++j) {
      const Feature& f = features[j];
      const double du = f.u - point.pixel.x();
      const double dv = f.v - point.pixel.y();
      if (du * du + dv * dv > options.radius * options.radius) continue;
      if (point.predicted_scale_norm > 0.0 && options.focal > 0.0) {
        const double level_gap =
            std::abs(std::log(normalizeScale(f.scale_sigma, options.focal) /
                              point.predicted_scale_norm) /
                     log_factor);
        if (level_gap > options.max_level_gap) continue;
      }
      const float d = descriptorDistance(point.descriptor, f.descriptor);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (best < 0 || d1 > options.max_distance) continue;
    if (options.ratio < 1.0 && d2 < std::numeric_limits<float>::max() &&
        d1 >= options.ratio * d2)
      continue;
    matches.push_back({i, best, d1});
  }
  return matches;
}

}  // namespace hyslam
