#pragma once

#include <Eigen/Dense>

#include "bikecross/eic.hpp"
#include "bikecross/leg.hpp"
#include "bikecross/params.hpp"
#include "bikecross/reference.hpp"
#include "bikecross/state.hpp"

namespace bikecross {

struct ImpulseConfig {
  double kappa = 0.05;            // impulse window (s)
  double horizon = 1.0;           // rollout horizon for the cost (s)
  double delta_tau_x_max = 30.0;  // roll-torque cap (N m)
  double f_z_max = 190.0;         // vertical contact-force cap (N)
  double v_max = 1.5;             // speed box for the re-init decision (m/s)
  double v_min = 0.1;             // lower speed box edge (m/s)
  double phi_max = deg2rad(30.0); // steer bound enforced along rollouts (rad)
  double r_iy = 0.12;             // lateral contact offset of the foot (m)
  Eigen::Matrix<double, 6, 1> p_diag{
      (Eigen::Matrix<double, 6, 1>() << 1, 1, 1, 1, 10, 10).finished()};
  Eigen::Vector2d q_diag{10, 10};
  void validate() const;

  // Largest roll-rate jump the torque and force caps allow.
  double max_rate_jump(const BikebotParams& p) const;
};

struct TorqueResult {
  double delta_tau_x = 0.0;
  bool clamped = false;  // true when the unclamped value exceeded the cap
};

struct ImpulseCommand {
  double delta_tau_x = 0.0;  // constant roll torque over the window (N m)
  double t_tau = 0.0;        // window start (s)
  double t_tau_plus = 0.0;   // window end = t_tau + kappa (s)
  LegSide side = LegSide::Left;
  double f_z = 0.0;                    // vertical contact force (N)
  Eigen::Vector3d force_h{0, 0, 0};    // full contact force in H
  Eigen::Vector3d theta{0, 0, 0};      // joint angles at the contact pose
  Eigen::Vector3d tau_theta{0, 0, 0};  // joint torques
  Eigen::Vector3d delta_tau{0, 0, 0};  // applied torque vector r_i x F
};

struct ReinitDecision {
  double dot_varphi_b_plus = 0.0;   // chosen roll rate after the impulse
  double v_plus = 0.0;              // chosen forward speed after the impulse
  double delta_dot_varphi_b = 0.0;  // rate jump relative to pre-impulse
  double cost = 0.0;                // penalized rollout cost of the choice
  double no_impulse_cost = 0.0;     // penalized cost of leaving state as-is
  bool feasible = true;             // no constraint violation along rollout
};

// Linearized-roll constants about upright with a frozen steer angle:
// ddot(phi_b) = k1^2 phi_b - k2 tan(phi), k3 = k2/k1.
double k1_const(const BikebotParams& p);
double k2_const(double v, const BikebotParams& p);
double k3_const(double v, const BikebotParams& p);

// Closed-form roll excursion of the frozen-steer linearized model.
double roll_closed_form(double t, double phi_b0, double dphi_b0,
                        double phi_steer, double v, const BikebotParams& p);

// Constant torque realizing a roll-rate jump over the window; clamped to the
// configured cap with a report flag.
TorqueResult impulse_torque(double target_rate, double pre_rate,
                            const ImpulseConfig& cfg, const BikebotParams& p);

// Contact force, side selection, foot pose and joint torques realizing a
// given roll torque. The contact point is (0, +-r_iy, 0) in H, so the
// vertical force maps exactly: delta_tau_x = r_iy * F_z. When the pure
// vertical force would exceed a joint-torque cap, the smallest horizontal
// force components restoring feasibility are added (the roll torque is
// unaffected; the parasitic yaw component is recorded in delta_tau).
ImpulseCommand leg_command(double delta_tau_x, const ImpulseConfig& cfg,
                           double varphi_b, const LegGeometry& geom);

// Analytic minimum impulsive-torque magnitude for recovery, evaluated
// exactly as the published bound is written.
double min_impulse(double phi_b_pre, double dphi_b_pre, double v,
                   const ImpulseConfig& cfg, const BikebotParams& p);

// Sign-structured necessary condition on a candidate torque. Throws ZeroRate
// at zero pre-impulse roll rate (sign undefined).
bool check_necessary_condition(double phi_b_pre, double dphi_b_pre,
                               double delta_tau_x, double v,
                               const ImpulseConfig& cfg,
                               const BikebotParams& p);

// Choose post-impulse (roll rate, speed) minimizing the horizon-integrated
// tracking+balance cost of a closed-loop rollout, over a coarse grid plus
// local quadratic refinement. The rate box is one-sided per the sign rule
// when sign_rate is nonzero. Throws Infeasible when the constraint box is
// empty or every candidate rollout diverges.
ReinitDecision optimize_reinit(const BikebotState& s_post,
                               const ReferenceTrajectory& ref,
                               const ImpulseConfig& cfg,
                               const BikebotParams& p,
                               const ActuatorLimits& lim,
                               const ControllerGains& gains,
                               const EicConfig& eic_cfg);

}  // namespace bikecross
