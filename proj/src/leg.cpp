#include "bikecross/leg.hpp"

#include <cmath>

#include "bikecross/errors.hpp"

namespace bikecross {

namespace {

void check_limits(const Eigen::Vector3d& theta, const LegGeometry& geom) {
  for (int i = 0; i < 3; ++i) {
    if (!(std::abs(theta[i]) <= geom.joint_limit)) {
      throw JointLimit("joint angle outside symmetric limit");
    }
  }
}

// Left-leg chain in B. The right leg is the exact y-mirror of this chain:
// r_R(th0, th1, th2) = diag(1,-1,1) * r_L(-th0, th1, th2).
Eigen::Vector3d fk_body_left(const Eigen::Vector3d& th, const LegGeometry& g) {
  const double s0 = std::sin(th[0]), c0 = std::cos(th[0]);
  const double s1 = std::sin(th[1]), c1 = std::cos(th[1]);
  const double s12 = std::sin(th[1] + th[2]), c12 = std::cos(th[1] + th[2]);
  const double rx = g.l_x - g.l_b + g.l2 * s12 + g.l1 * s1;
  const double a = g.l_y + g.l0 * c0 - g.l1 * s0 * c1 - g.l2 * s0 * c12;
  const double b = g.h_b + g.l0 * s0 + g.l1 * c0 * c1 + g.l2 * c0 * c12;
  return {rx, a, -b};
}

Eigen::Matrix3d jacobian_left(const Eigen::Vector3d& th, const LegGeometry& g) {
  const double s0 = std::sin(th[0]), c0 = std::cos(th[0]);
  const double s1 = std::sin(th[1]), c1 = std::cos(th[1]);
  const double s12 = std::sin(th[1] + th[2]), c12 = std::cos(th[1] + th[2]);
  Eigen::Matrix3d J;
  // row 0: d r_x / d theta
  J(0, 0) = 0.0;
  J(0, 1) = g.l1 * c1 + g.l2 * c12;
  J(0, 2) = g.l2 * c12;
  // row 1: d A / d theta
  J(1, 0) = -g.l0 * s0 - g.l1 * c0 * c1 - g.l2 * c0 * c12;
  J(1, 1) = g.l1 * s0 * s1 + g.l2 * s0 * s12;
  J(1, 2) = g.l2 * s0 * s12;
  // row 2: d(-B) / d theta
  J(2, 0) = -g.l0 * c0 + g.l1 * s0 * c1 + g.l2 * s0 * c12;
  J(2, 1) = g.l1 * c0 * s1 + g.l2 * c0 * s12;
  J(2, 2) = g.l2 * c0 * s12;
  return J;
}

Eigen::Vector3d fk_body_raw(const Eigen::Vector3d& th, LegSide side,
                            const LegGeometry& g) {
  if (side == LegSide::Left) return fk_body_left(th, g);
  const Eigen::Vector3d rl = fk_body_left({-th[0], th[1], th[2]}, g);
  return {rl.x(), -rl.y(), rl.z()};
}

Eigen::Matrix3d jacobian_raw(const Eigen::Vector3d& th, LegSide side,
                             const LegGeometry& g) {
  if (side == LegSide::Left) return jacobian_left(th, g);
  Eigen::Matrix3d J = jacobian_left({-th[0], th[1], th[2]}, g);
  J.row(1) = -J.row(1);
  J.col(0) = -J.col(0);
  return J;
}

}  // namespace

Eigen::Matrix3d rot_body_to_horizontal(double varphi_b) {
  const double c = std::cos(varphi_b), s = std::sin(varphi_b);
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, c, s, 0, -s, c;
  return r;
}

Eigen::Vector3d foot_position_body(const JointState& j, const LegGeometry& geom) {
  check_limits(j.theta, geom);
  return fk_body_raw(j.theta, j.side, geom);
}

Eigen::Vector3d forward_kinematics(const JointState& j, double varphi_b,
                                   const LegGeometry& geom) {
  return rot_body_to_horizontal(varphi_b) * foot_position_body(j, geom);
}

Eigen::Matrix3d leg_jacobian(const JointState& j, const LegGeometry& geom) {
  check_limits(j.theta, geom);
  return jacobian_raw(j.theta, j.side, geom);
}

JointState inverse_kinematics(const Eigen::Vector3d& target_h, double varphi_b,
                              LegSide side, const LegGeometry& geom) {
  const double side_sign = (side == LegSide::Left) ? 1.0 : -1.0;
  const Eigen::Vector3d target_b =
      rot_body_to_horizontal(varphi_b).transpose() * target_h;

  // Reach guard about the hip-roll joint location.
  const Eigen::Vector3d base(geom.l_x - geom.l_b, side_sign * geom.l_y,
                             -geom.h_b);
  const double reach = geom.l0 + geom.l1 + geom.l2;
  if ((target_b - base).norm() > reach + 1e-9) {
    throw Unreachable("target outside the reachable annulus");
  }

  JointState j;
  j.side = side;
  j.theta = Eigen::Vector3d(side_sign * -0.33, -1.78, -1.20);  // crouch seed

  constexpr double kDamping = 1e-3;
  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-6;
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::Vector3d err = target_b - fk_body_raw(j.theta, side, geom);
    if (err.norm() < kTol) {
      check_limits(j.theta, geom);
      return j;
    }
    const Eigen::Matrix3d J = jacobian_raw(j.theta, side, geom);
    const Eigen::Matrix3d A =
        J.transpose() * J + kDamping * kDamping * Eigen::Matrix3d::Identity();
    j.theta += A.ldlt().solve(J.transpose() * err);
  }
  throw Unreachable("inverse kinematics failed to converge");
}

Eigen::Vector3d torques_from_force(const Eigen::Vector3d& force_h,
                                   const JointState& j, double varphi_b,
                                   const LegGeometry& geom) {
  const Eigen::Matrix3d J = leg_jacobian(j, geom);
  const Eigen::Vector3d tau =
      J.transpose() * rot_body_to_horizontal(varphi_b).transpose() * force_h;
  for (int i = 0; i < 3; ++i) {
    if (!(std::abs(tau[i]) <= geom.tau_max)) {
      throw TorqueLimit("joint torque above the per-joint limit");
    }
  }
  return tau;
}

Eigen::Vector3d force_from_torques(const JointState& j, double varphi_b,
                                   const LegGeometry& geom) {
  const Eigen::Matrix3d J = leg_jacobian(j, geom);
  if (std::abs(J.determinant()) <= 1e-6) {
    throw SingularPose("leg pose Jacobian is rank-deficient");
  }
  const Eigen::Matrix3d M =
      J.transpose() * rot_body_to_horizontal(varphi_b).transpose();
  return M.fullPivLu().solve(j.tau);
}

Eigen::Vector3d applied_torque(const Eigen::Vector3d& r_i,
                               const Eigen::Vector3d& force) {
  return r_i.cross(force);
}

}  // namespace bikecross
