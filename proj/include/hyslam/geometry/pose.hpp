#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hyslam {

// Rigid transform in SE(3). Maps world-frame points into the camera frame:
// p_cam = R * p_world + t. Rotation is kept as a unit quaternion and is
// renormalized after every composition so long chains do not drift.
class Pose {
 public:
  Pose() : q_(Eigen::Quaterniond::Identity()), t_(Eigen::Vector3d::Zero()) {}

  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
      : q_(q.normalized()), t_(t) {}

  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t)
      : q_(Eigen::Quaterniond(rotation).normalized()), t_(t) {}

  static Pose Identity() { return Pose(); }

  const Eigen::Quaterniond& rotation() const { return q_; }
  const Eigen::Vector3d& translation() const { return t_; }
  Eigen::Matrix3d rotationMatrix() const { return q_.toRotationMatrix(); }

  // Result applies `other` first, then `*this`.
  Pose compose(const Pose& other) const {
    Eigen::Quaterniond q = q_ * other.q_;
    q.normalize();
    return Pose(q, q_ * other.t_ + t_);
  }

  Pose operator*(const Pose& other) const { return compose(other); }

  Pose inverse() const {
    Eigen::Quaterniond qi = q_.conjugate();
    return Pose(qi, -(qi * t_));
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return q_ * p + t_; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return apply(p); }

  // Camera center expressed in the world frame, -R^T t.
  Eigen::Vector3d center() const { return -(q_.conjugate() * t_); }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotationMatrix();
    m.topRightCorner<3, 1>() = t_;
    return m;
  }

  // Left-multiplicative se(3) retraction: exp([omega, v]) * this.
  // Used by the optimizers; omega is the rotational part.
  Pose retract(const Eigen::Matrix<double, 6, 1>& delta) const {
    const Eigen::Vector3d omega = delta.head<3>();
    const Eigen::Vector3d v = delta.tail<3>();
    const double angle = omega.norm();
    Eigen::Quaterniond dq;
    if (angle < 1e-12) {
      dq = Eigen::Quaterniond(1.0, 0.5 * omega.x(), 0.5 * omega.y(),
                              0.5 * omega.z());
    } else {
      dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
    }
    dq.normalize();
    Eigen::Quaterniond q = dq * q_;
    q.normalize();
    return Pose(q, dq * t_ + v);
  }

  // Geodesic rotation distance plus translation norm, for test tolerances.
  double rotationAngleTo(const Pose& other) const {
    return q_.angularDistance(other.q_);
  }

 private:
  Eigen::Quaterniond q_;
  Eigen::Vector3d t_;
};

}  // namespace hyslam
