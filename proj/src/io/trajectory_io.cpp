#include "hyslam/io/trajectory_io.hpp"

#include <fstream>
#include <sstream>

#include "hyslam/io/errors.hpp"

namespace hyslam {

Trajectory parseTrajectory(const std::string& text) {
  Trajectory trajectory;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  double last_ts = -std::numeric_limits<double>::infinity();
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts)) continue;  // blank line
    if (!(ls >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw ParseError("trajectory line " + std::to_string(line_number) +
                       ": expected 8 fields");
    if (ts <= last_ts)
      throw ParseError("trajectory line " + std::to_string(line_number) +
                       ": timestamps not strictly increasing");
    last_ts = ts;
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (q.norm() < 1e-12)
      throw ParseError("trajectory line " + std::to_string(line_number) +
                       ": zero quaternion");
    trajectory.push(ts, Pose(q, Eigen::Vector3d(tx, ty, tz)));
  }
  return trajectory;
}

Trajectory readTrajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseTrajectory(buffer.str());
}

void writeTrajectory(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write trajectory file: " + path);
  out.precision(17);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& sp : trajectory.poses) {
    const auto& t = sp.pose.translation();
    const auto& q = sp.pose.rotation();
    out << sp.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

}  // namespace hyslam
