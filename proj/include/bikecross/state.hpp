#pragma once

#include <cmath>

namespace bikecross {

// Planar bikebot state. Yaw rate is not stored: it is an algebraic function
// of (v, phi, varphi_b) through the steering kinematics, so integrating it
// separately would let it drift off the constraint.
struct BikebotState {
  double t = 0.0;            // time (s)
  double x = 0.0;            // rear-contact position, world frame (m)
  double y = 0.0;
  double psi = 0.0;          // heading (rad)
  double varphi_b = 0.0;     // body roll (rad)
  double dot_varphi_b = 0.0; // body roll rate (rad/s)
  double v = 0.0;            // forward speed (m/s)
  double dot_v = 0.0;        // forward acceleration (m/s^2)
  double phi = 0.0;          // steering angle (rad)

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(psi) &&
           std::isfinite(varphi_b) && std::isfinite(dot_varphi_b) &&
           std::isfinite(v) && std::isfinite(dot_v) && std::isfinite(phi);
  }
};

// Controller output per tick: a jerk set-point for the drive wheel and a
// steer-angle set-point for the steering servo.
struct ActuatorCommand {
  double u_v = 0.0;     // commanded d(dot_v)/dt (m/s^3)
  double phi_cmd = 0.0; // commanded steer angle (rad)
};

// External roll torque source, resolved once per integration step (zero-order
// hold) so that a finite torque window integrates to an exact impulse.
struct RollTorquePort {
  double tau = 0.0;      // roll torque (N m)
  double t_until = -1.0; // active while t < t_until

  double at(double t) const { return t < t_until ? tau : 0.0; }
};

}  // namespace bikecross
