#pragma once

#include <cmath>

#include "bikecross/errors.hpp"

namespace bikecross {

inline constexpr double kGravity = 9.81;  // m/s^2

inline constexpr double deg2rad(double d) { return d * M_PI / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / M_PI; }

// Rigid-body and geometry constants of the desk-scale bikebot. Defaults are
// the identified hardware values; everything is overridable per scenario.
struct BikebotParams {
  double m_b = 24.0;    // body mass (kg)
  double J_b = 0.25;    // body roll inertia about the wheel-contact axis (kg m^2)
  double J_z = 0.5;     // yaw inertia (kg m^2)
  double l = 0.87;      // wheelbase (m)
  double R_w = 0.225;   // wheel radius (m)
  double l_G = -0.04;   // CoM longitudinal offset from the rear contact (m)
  double h_G = 0.35;    // CoM height (m)
  double epsilon = deg2rad(17.0);  // caster angle (rad)

  // Total roll inertia including the mass term.
  double j_t() const { return J_b + m_b * h_G * h_G; }

  void validate() const {
    if (m_b <= 0 || J_b <= 0 || J_z <= 0 || l <= 0 || R_w <= 0 || h_G <= 0)
      throw ValidationError("BikebotParams: masses, inertias and lengths must be positive");
    if (epsilon <= -M_PI / 2 || epsilon >= M_PI / 2)
      throw ValidationError("BikebotParams: caster angle must lie in (-90, 90) deg");
  }
};

// Three-joint leg chain geometry (hip roll, hip pitch, knee pitch) plus the
// mount offsets from the body frame. Left leg; the right leg mirrors in y.
struct LegGeometry {
  double l0 = 0.075;   // hip link (m)
  double l1 = 0.212;   // thigh (m)
  double l2 = 0.207;   // shank (m)
  double l_x = 0.1;    // mount offset, longitudinal (m)
  double l_y = 0.13;   // mount offset, lateral (m)
  double l_b = -0.14;  // seat offset, longitudinal (m)
  double h_b = 0.26;   // seat offset, vertical (m)
  double joint_limit = deg2rad(150.0);  // symmetric range per joint (rad)
  double tau_max = 25.0;                // per-joint torque cap (N m)

  void validate() const {
    if (l0 <= 0 || l1 <= 0 || l2 <= 0)
      throw ValidationError("LegGeometry: link lengths must be positive");
    if (joint_limit <= 0 || joint_limit > M_PI)
      throw ValidationError("LegGeometry: joint limit must lie in (0, 180] deg");
    if (tau_max <= 0) throw ValidationError("LegGeometry: torque cap must be positive");
  }
};

// Actuation and state limits shared by the plant, the controller and every
// constrained rollout. The steering command path is: desired yaw rate ->
// steer angle -> first-order lag with slew and travel limits.
struct ActuatorLimits {
  double phi_max = deg2rad(30.0);        // steer travel (rad)
  double v_max = 1.5;                    // forward speed cap (m/s)
  double v_min = 0.05;                   // validity floor for the steering maps (m/s)
  double dot_v_max = 2.5;                // acceleration cap (m/s^2)
  double u_v_max = 6.0;                  // jerk command cap (m/s^3)
  double steer_lag = 0.05;               // steering servo time constant (s)
  double steer_rate_max = deg2rad(200);  // steering slew cap (rad/s)

  void validate() const {
    if (phi_max <= 0 || phi_max >= M_PI / 2)
      throw ValidationError("ActuatorLimits: steer travel must lie in (0, 90) deg");
    if (v_max <= v_min || v_min <= 0)
      throw ValidationError("ActuatorLimits: need 0 < v_min < v_max");
    if (dot_v_max <= 0 || u_v_max <= 0 || steer_lag <= 0 || steer_rate_max <= 0)
      throw ValidationError("ActuatorLimits: rate caps must be positive");
  }
};

}  // namespace bikecross
