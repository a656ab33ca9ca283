#include "hyslam/io/map_io.hpp"

#include <fstream>
#include <iomanip>

#include "hyslam/io/errors.hpp"

namespace hyslam {

void saveMapDump(const WorldMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write map dump: " + path);
  out << std::setprecision(17);
  out << "hyslam_map 1\n";
  for (Id kf_id : map.keyframeIds()) {
    const KeyFrame* kf = map.keyframe(kf_id);
    const Eigen::Quaterniond& q = kf->pose.rotation();
    const Eigen::Vector3d& t = kf->pose.translation();
    out << "keyframe " << kf_id << ' '
        << (kf->kind == CameraKind::kStereo ? "stereo" : "fisheye") << ' '
        << kf->timestamp << ' ' << kf->parent << ' ' << q.w() << ' ' << q.x()
        << ' ' << q.y() << ' ' << q.z() << ' ' << t.x() << ' ' << t.y() << ' '
        << t.z() << '\n';
  }
  for (Id point_id : map.mapPointIds()) {
    const MapPoint* mp = map.mapPoint(point_id);
    out << "point " << point_id << ' ' << mp->position.x() << ' '
        << mp->position.y() << ' ' << mp->position.z() << ' '
        << mp->observations.size();
    for (const auto& [kf_id, feature_index] : mp->observations)
      out << ' ' << kf_id << ' ' << feature_index;
    out << '\n';
  }
}

}  // namespace hyslam
