#pragma once

#include "bikecross/params.hpp"
#include "bikecross/state.hpp"

namespace bikecross {

// Steering kinematics: yaw rate induced by the steer angle at a given roll.
//   psi_dot = v * cos(epsilon) * tan(phi) / (l * cos(varphi_b))
// Throws RollSingularity when the roll approaches +-90 deg.
double yaw_rate(double v, double phi, double varphi_b, const BikebotParams& p);
double yaw_rate(const BikebotState& s, const BikebotParams& p);

// Inverse of yaw_rate in phi, clamped to the steer travel limit.
double steering_from_yawrate(double psi_dot_des, double v, double varphi_b,
                             const BikebotParams& p, const ActuatorLimits& lim);

// Roll-dynamics right-hand side pieces:
//   J_t * ddot_varphi_b = f1(varphi_b) + h(varphi_b) * u_psi + delta_tau_x
// f1 collects the yaw-coupled and gravity torques; h is the control
// effectiveness of the yaw acceleration.
double f1_roll(double varphi_b, double psi_dot, double v, const BikebotParams& p);
double h_roll(double varphi_b, const BikebotParams& p);

// Roll acceleration given a yaw acceleration input and an external torque.
double roll_accel(const BikebotState& s, double u_psi, double ext_tau,
                  const BikebotParams& p);

// Yaw acceleration implied by the steering state and its rate:
//   u_psi = (dot_v tan(phi) cos(eps))/(l cos(varphi_b))
//         + (v cos(eps))/(l cos(varphi_b)) * (sec^2(phi) dot_phi
//            + tan(phi) tan(varphi_b) dot_varphi_b)
double u_psi_from_steering(const BikebotState& s, double dot_phi,
                           const BikebotParams& p);

// Steering-induced balance torque (analysis path only; the simulator's roll
// uses roll_accel). Requires v above the validity floor.
double steering_torque(const BikebotState& s, const BikebotParams& p);

// Companion drift term of the analysis form J_t*ddot = f2 + tau_s.
double f2_roll(double varphi_b, double phi, double dot_phi, double v,
               const BikebotParams& p);

// Steering servo rate toward the commanded angle: first-order lag with slew
// limiting. This is the dot_phi the plant actually sees.
double steer_rate(double phi, double phi_cmd, const ActuatorLimits& lim);

// One RK4 step of the coupled plant at fixed dt (dt in (0, 0.02]). The
// external torque is sampled once at the step start (zero-order hold) so a
// torque window integrates to an exact impulse. Speed, acceleration and
// steer angle are clamped to the actuator limits after the step. Throws
// BalanceLost when the roll reaches +-90 deg.
BikebotState step(const BikebotState& s, const ActuatorCommand& cmd,
                  const RollTorquePort& ext, double dt, const BikebotParams& p,
                  const ActuatorLimits& lim);

}  // namespace bikecross
