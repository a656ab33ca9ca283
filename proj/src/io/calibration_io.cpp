#include "hyslam/io/calibration_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hyslam/io/errors.hpp"

namespace hyslam {
namespace {

std::map<std::string, std::string> parseKeyValue(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value))
      throw ParseError("calibration line " + std::to_string(line_number) +
                       ": key without value");
    kv[key] = value;
  }
  return kv;
}

double requireDouble(const std::map<std::string, std::string>& kv,
                     const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("missing calibration key: " + key);
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ParseError("calibration key " + key + ": not a number");
  }
}

double optionalDouble(const std::map<std::string, std::string>& kv,
                      const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stod(it->second);
}

void checkPinhole(const PinholeModel& m) {
  if (m.fx <= 0.0) throw InvalidCalibration("fx", "must be positive");
  if (m.fy <= 0.0) throw InvalidCalibration("fy", "must be positive");
  if (m.width <= 0) throw InvalidCalibration("width", "must be positive");
  if (m.height <= 0) throw InvalidCalibration("height", "must be positive");
  if (m.cx <= 0.0 || m.cx >= m.width)
    throw InvalidCalibration("cx", "must lie inside the image");
  if (m.cy <= 0.0 || m.cy >= m.height)
    throw InvalidCalibration("cy", "must lie inside the image");
}

}  // namespace

Camera parseCalibration(const std::string& text) {
  const auto kv = parseKeyValue(text);
  auto kind_it = kv.find("camera_kind");
  if (kind_it == kv.end()) throw ParseError("missing calibration key: camera_kind");

  if (kind_it->second == "pinhole_stereo") {
    StereoRig rig;
    rig.left.fx = requireDouble(kv, "fx");
    rig.left.fy = requireDouble(kv, "fy");
    rig.left.cx = requireDouble(kv, "cx");
    rig.left.cy = requireDouble(kv, "cy");
    rig.left.width = static_cast<int>(requireDouble(kv, "width"));
    rig.left.height = static_cast<int>(requireDouble(kv, "height"));
    rig.baseline = requireDouble(kv, "baseline");
    checkPinhole(rig.left);
    if (rig.baseline <= 0.0)
      throw InvalidCalibration("baseline", "must be positive");
    return Camera::Stereo(rig);
  }

  if (kind_it->second == "kannala_brandt") {
    FisheyeModel m;
    m.fx = requireDouble(kv, "fx");
    m.fy = requireDouble(kv, "fy");
    m.cx = requireDouble(kv, "cx");
    m.cy = requireDouble(kv, "cy");
    m.width = static_cast<int>(requireDouble(kv, "width"));
    m.height = static_cast<int>(requireDouble(kv, "height"));
    m.k1 = requireDouble(kv, "k1");
    m.k2 = requireDouble(kv, "k2");
    m.k3 = requireDouble(kv, "k3");
    m.k4 = requireDouble(kv, "k4");
    m.theta_max = optionalDouble(kv, "theta_max_deg", 95.0) * M_PI / 180.0;
    if (m.fx <= 0.0) throw InvalidCalibration("fx", "must be positive");
    if (m.fy <= 0.0) throw InvalidCalibration("fy", "must be positive");
    if (m.theta_max <= 0.0 || m.theta_max >= M_PI)
      throw InvalidCalibration("theta_max_deg", "must lie in (0, 180)");
    const bool explicit_fov = kv.count("theta_max_deg") > 0;
    if (explicit_fov) {
      // A stated FOV with a non-monotone d(theta) is a broken calibration.
      if (!m.distortionMonotone())
        throw InvalidCalibration("theta_max_deg",
                                 "d(theta) not strictly increasing");
    } else {
      // Default FOV: clamp to the strictly increasing range of d(theta) so
      // the Newton unprojection stays well defined.
      while (m.theta_max > 0.05 && !m.distortionMonotone())
        m.theta_max *= 0.95;
      if (!m.distortionMonotone())
        throw InvalidCalibration("k1", "d(theta) not increasing near zero");
    }
    return Camera::Fisheye(m);
  }

  throw ParseError("unknown camera_kind: " + kind_it->second);
}

Camera loadCalibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open calibration file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseCalibration(buffer.str());
}

void saveCalibration(const Camera& camera, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write calibration file: " + path);
  out.precision(17);
  if (camera.kind == CameraKind::kStereo) {
    const auto& m = camera.rig.left;
    out << "camera_kind pinhole_stereo\n"
        << "fx " << m.fx << "\nfy " << m.fy << "\ncx " << m.cx << "\ncy "
        << m.cy << "\nwidth " << m.width << "\nheight " << m.height
        << "\nbaseline " << camera.rig.baseline << "\n";
  } else {
    const auto& m = camera.fisheye;
    out << "camera_kind kannala_brandt\n"
        << "fx " << m.fx << "\nfy " << m.fy << "\ncx " << m.cx << "\ncy "
        << m.cy << "\nwidth " << m.width << "\nheight " << m.height << "\nk1 "
        << m.k1 << "\nk2 " << m.k2 << "\nk3 " << m.k3 << "\nk4 " << m.k4
        << "\ntheta_max_deg " << m.theta_max * 180.0 / M_PI << "\n";
  }
}

}  // namespace hyslam
