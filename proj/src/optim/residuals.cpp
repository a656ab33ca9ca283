#include "hyslam/optim/residuals.hpp"

namespace hyslam {

bool evaluateReprojection(const Camera& camera, ResidualKind kind,
                          const Pose& pose, const Eigen::Vector3d& world_point,
                          const Eigen::Vector3d& observed,
                          Eigen::Vector3d* residual,
                          Eigen::Matrix<double, 3, 6>* jac_pose,
                          Eigen::Matrix3d* jac_point) {
  const Eigen::Vector3d p_cam = pose * world_point;

  Eigen::Vector3d projected = Eigen::Vector3d::Zero();
  Eigen::Matrix3d jac_projection = Eigen::Matrix3d::Zero();
  switch (kind) {
    case ResidualKind::kMonoPinhole: {
      auto pix = camera.rig.left.project(p_cam);
      if (!pix) return false;
      projected.head<2>() = pix.value();
      if (jac_pose || jac_point)
        jac_projection.topRows<2>() = camera.rig.left.projectionJacobian(p_cam);
      break;
    }
    case ResidualKind::kStereo: {
      auto pix = camera.rig.project(p_cam);
      if (!pix) return false;
      projected = pix.value();
      if (jac_pose || jac_point)
        jac_projection = camera.rig.projectionJacobian(p_cam);
      break;
    }
    case ResidualKind::kFisheye: {
      auto pix = camera.fisheye.project(p_cam);
      if (!pix) return false;
      projected.head<2>() = pix.value();
      if (jac_pose || jac_point)
        jac_projection.topRows<2>() =
            camera.fisheye.projectionJacobian(p_cam);
      break;
    }
  }

  *residual = observed - projected;
  if (residualDim(kind) == 2) (*residual)(2) = 0.0;

  if (jac_pose || jac_point) {
    // p_cam = exp(delta) * (R p + t): d p_cam/d delta = [-[p_cam]x  I].
    if (jac_pose) {
      Eigen::Matrix<double, 3, 6> dp;
      dp.leftCols<3>() << 0.0, p_cam.z(), -p_cam.y(),  //
          -p_cam.z(), 0.0, p_cam.x(),                  //
          p_cam.y(), -p_cam.x(), 0.0;
      dp.rightCols<3>() = Eigen::Matrix3d::Identity();
      *jac_pose = -jac_projection * dp;
    }
    if (jac_point) *jac_point = -jac_projection * pose.rotationMatrix();
  }
  return true;
}

}  // namespace hyslam
