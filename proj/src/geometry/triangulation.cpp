#include "hyslam/geometry/triangulation.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace hyslam {

Result<Eigen::Vector3d, TriangulationError> triangulateStereo(
    double u_left, double v, double u_right, const StereoRig& rig,
    double min_disparity) {
  const double disparity = u_left - u_right;
  if (disparity < min_disparity)
    return TriangulationError::kDegenerateDisparity;
  const double z = rig.left.fx * rig.baseline / disparity;
  const double x = (u_left - rig.left.cx) * z / rig.left.fx;
  const double y = (v - rig.left.cy) * z / rig.left.fy;
  return Eigen::Vector3d(x, y, z);
}

Result<Eigen::Vector3d, TriangulationError> triangulateTwoView(
    const Eigen::Vector3d& ray_a, const Eigen::Vector3d& ray_b,
    const Pose& pose_ab, double min_parallax_rad) {
  // Express both rays in frame a. Ray a passes through the origin; ray b
  // through the b-camera center with direction R_ab * ray_b.
  const Eigen::Vector3d da = ray_a.normalized();
  const Eigen::Vector3d db = (pose_ab.rotation() * ray_b).normalized();
  const Eigen::Vector3d origin_b = pose_ab.translation();

  const double cos_angle = std::abs(da.dot(db));
  if (cos_angle > std::cos(min_parallax_rad))
    return TriangulationError::kInsufficientParallax;

  // Closest points: o_a + s*da and o_b + t*db; solve the 2x2 system from
  // perpendicularity of the connecting segment to both rays.
  const double b_dot = da.dot(db);
  const Eigen::Vector3d w = -origin_b;  // o_a - o_b
  const double denom = 1.0 - b_dot * b_dot;
  const double s = (b_dot * db.dot(w) - da.dot(w)) / denom;
  const double t = (db.dot(w) - b_dot * da.dot(w)) / denom;
  if (s <= 0.0) return TriangulationError::kNegativeDepth;

  const Eigen::Vector3d p_a = s * da;
  const Eigen::Vector3d p_b = origin_b + t * db;
  const Eigen::Vector3d midpoint = 0.5 * (p_a + p_b);

  // Positive depth in frame b as well.
  const Eigen::Vector3d in_b = pose_ab.inverse() * midpoint;
  if (in_b.dot(ray_b.normalized()) <= 0.0)
    return TriangulationError::kNegativeDepth;
  return midpoint;
}

}  // namespace hyslam
