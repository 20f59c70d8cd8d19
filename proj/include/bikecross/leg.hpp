#pragma once

#include <Eigen/Dense>

#include "bikecross/params.hpp"

namespace bikecross {

enum class LegSide { Left, Right };

struct JointState {
  LegSide side = LegSide::Left;
  Eigen::Vector3d theta{0.0, 0.0, 0.0};  // hip roll, hip pitch, knee pitch
  Eigen::Vector3d tau{0.0, 0.0, 0.0};    // joint torques (N*m)
};

// Rotation taking body-frame (B) vectors to inertial-horizontal frame (H)
// vectors at body roll varphi_b, matching the leg kinematic chain convention.
Eigen::Matrix3d rot_body_to_horizontal(double varphi_b);

// Foot position in B (no roll applied). Throws JointLimit outside limits.
Eigen::Vector3d foot_position_body(const JointState& j, const LegGeometry& geom);

// Foot position in H at body roll varphi_b.
Eigen::Vector3d forward_kinematics(const JointState& j, double varphi_b,
                                   const LegGeometry& geom);

// Analytic 3x3 Jacobian of the B-frame foot position w.r.t. theta.
Eigen::Matrix3d leg_jacobian(const JointState& j, const LegGeometry& geom);

// Damped least-squares IK from a per-side crouch seed. Throws Unreachable
// when the target lies outside the reachable annulus or the iteration fails
// to reach residual < 1e-6 m; throws JointLimit when the solution violates
// joint limits.
JointState inverse_kinematics(const Eigen::Vector3d& target_h, double varphi_b,
                              LegSide side, const LegGeometry& geom);

// tau = J^T R^T F for a contact force F expressed in H. Throws TorqueLimit
// when any |tau_j| exceeds geom.tau_max.
Eigen::Vector3d torques_from_force(const Eigen::Vector3d& force_h,
                                   const JointState& j, double varphi_b,
                                   const LegGeometry& geom);

// Inverse map F = (J^T R^T)^{-1} tau using j.tau. Throws SingularPose when
// the pose Jacobian is rank-deficient (|det J| <= 1e-6).
Eigen::Vector3d force_from_torques(const JointState& j, double varphi_b,
                                   const LegGeometry& geom);

// Torque applied to the bikebot by a contact force at position r_i (H frame).
Eigen::Vector3d applied_torque(const Eigen::Vector3d& r_i,
                               const Eigen::Vector3d& force);

}  // namespace bikecross
