#pragma once

#include <Eigen/Dense>

namespace berrysim {

// Rigid transform of the end-effector (and the eye-in-hand camera fixed at
// the gripper centre). The camera looks along the +z axis of this frame.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // mm, world frame
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  Eigen::Vector3d to_local(const Eigen::Vector3d& world_point) const {
    return rotation.transpose() * (world_point - position);
  }
  Eigen::Vector3d to_world(const Eigen::Vector3d& local_point) const {
    return rotation * local_point + position;
  }
};

}  // namespace berrysim
