#include "bikecross/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "bikecross/errors.hpp"

namespace bikecross {

namespace {

constexpr double kCosRollFloor = 1e-3;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

double yaw_rate(double v, double phi, double varphi_b, const BikebotParams& p) {
  const double c_b = std::cos(varphi_b);
  if (c_b < kCosRollFloor)
    throw RollSingularity("yaw_rate: roll too close to +-90 deg");
  return v * std::cos(p.epsilon) * std::tan(phi) / (p.l * c_b);
}

double yaw_rate(const BikebotState& s, const BikebotParams& p) {
  return yaw_rate(s.v, s.phi, s.varphi_b, p);
}

double steering_from_yawrate(double psi_dot_des, double v, double varphi_b,
                             const BikebotParams& p, const ActuatorLimits& lim) {
  if (v < lim.v_min) throw LowSpeed("steering_from_yawrate: v below validity floor");
  const double phi =
      std::atan(psi_dot_des * p.l * std::cos(varphi_b) / (v * std::cos(p.epsilon)));
  return clamp(phi, -lim.phi_max, lim.phi_max);
}

double f1_roll(double varphi_b, double psi_dot, double v, const BikebotParams& p) {
  const double s_b = std::sin(varphi_b);
  const double c_b = std::cos(varphi_b);
  return p.m_b * p.h_G * psi_dot * v * c_b +
         p.m_b * p.h_G * p.h_G * psi_dot * psi_dot * s_b * c_b +
         p.m_b * kGravity * p.h_G * s_b;
}

double h_roll(double varphi_b, const BikebotParams& p) {
  return p.m_b * p.h_G * (p.l_G + p.l / 2.0) * std::cos(varphi_b);
}

double roll_accel(const BikebotState& s, double u_psi, double ext_tau,
                  const BikebotParams& p) {
  const double psi_dot = yaw_rate(s, p);
  return (f1_roll(s.varphi_b, psi_dot, s.v, p) + h_roll(s.varphi_b, p) * u_psi +
          ext_tau) /
         p.j_t();
}

double u_psi_from_steering(const BikebotState& s, double dot_phi,
                           const BikebotParams& p) {
  const double c_b = std::cos(s.varphi_b);
  if (c_b < kCosRollFloor)
    throw RollSingularity("u_psi_from_steering: roll too close to +-90 deg");
  const double c_e = std::cos(p.epsilon);
  const double t_phi = std::tan(s.phi);
  const double sec_phi = 1.0 / std::cos(s.phi);
  return (s.dot_v * t_phi * c_e) / (p.l * c_b) +
         (s.v * c_e) / (p.l * c_b) *
             (sec_phi * sec_phi * dot_phi +
              t_phi * std::tan(s.varphi_b) * s.dot_varphi_b);
}

double steering_torque(const BikebotState& s, const BikebotParams& p) {
  if (s.v <= 0.05) throw LowSpeed("steering_torque: v below 0.05 m/s");
  const double lever = p.l_G + p.l / 2.0;
  return (p.m_b * p.h_G * std::cos(p.epsilon) * s.v / p.l) *
         ((lever * s.dot_varphi_b / p.l) * std::tan(s.varphi_b) +
          p.l_G * s.dot_v / s.v - s.v) *
         std::tan(s.phi);
}

double f2_roll(double varphi_b, double phi, double dot_phi, double v,
               const BikebotParams& p) {
  const double t_b = std::tan(varphi_b);
  const double t_phi = std::tan(phi);
  const double sec_phi = 1.0 / std::cos(phi);
  const double c_e = std::cos(p.epsilon);
  return p.m_b * kGravity * p.h_G * std::sin(varphi_b) +
         p.m_b * p.h_G * p.h_G * (v * v * c_e * c_e / (p.l * p.l)) * t_b * t_phi *
             t_phi +
         p.m_b * p.h_G * (p.l_G + p.l / 2.0) * (v * c_e / p.l) * sec_phi * sec_phi *
             dot_phi;
}

double steer_rate(double phi, double phi_cmd, const ActuatorLimits& lim) {
  const double rate = (phi_cmd - phi) / lim.steer_lag;
  return clamp(rate, -lim.steer_rate_max, lim.steer_rate_max);
}

namespace {

// Plant derivative vector for the integrator, in fixed order.
struct Deriv {
  double dx, dy, dpsi, dvarphi_b, ddot_varphi_b, dv, ddot_v, dphi;
};

BikebotState advance(const BikebotState& s, const Deriv& d, double h) {
  BikebotState n = s;
  n.x += h * d.dx;
  n.y += h * d.dy;
  n.psi += h * d.dpsi;
  n.varphi_b += h * d.dvarphi_b;
  n.dot_varphi_b += h * d.ddot_varphi_b;
  n.v += h * d.dv;
  n.dot_v += h * d.ddot_v;
  n.phi += h * d.dphi;
  n.t = s.t;  // time advances once per full step
  return n;
}

Deriv full_rhs(const BikebotState& s, const ActuatorCommand& cmd, double ext_tau,
               const BikebotParams& p, const ActuatorLimits& lim) {
  Deriv d{};
  d.dpsi = yaw_rate(s, p);
  d.dx = s.v * std::cos(s.psi);
  d.dy = s.v * std::sin(s.psi);
  d.dvarphi_b = s.dot_varphi_b;
  d.dv = s.dot_v;
  d.ddot_v = cmd.u_v;
  d.dphi = steer_rate(s.phi, cmd.phi_cmd, lim);
  const double u_psi = u_psi_from_steering(s, d.dphi, p);
  d.ddot_varphi_b =
      (f1_roll(s.varphi_b, d.dpsi, s.v, p) + h_roll(s.varphi_b, p) * u_psi +
       ext_tau) /
      p.j_t();
  return d;
}

}  // namespace

BikebotState step(const BikebotState& s, const ActuatorCommand& cmd,
                  const RollTorquePort& ext, double dt, const BikebotParams& p,
                  const ActuatorLimits& lim) {
  if (!(dt > 0.0 && dt <= 0.02))
    throw ValidationError("step: dt must lie in (0, 0.02]");
  if (!s.finite()) throw ValidationError("step: non-finite state");
  if (std::abs(s.varphi_b) >= M_PI / 2)
    throw BalanceLost("step: |varphi_b| reached 90 deg");

  const double ext_tau = ext.at(s.t);  // zero-order hold across the step

  const Deriv k1 = full_rhs(s, cmd, ext_tau, p, lim);
  const Deriv k2 = full_rhs(advance(s, k1, dt / 2), cmd, ext_tau, p, lim);
  const Deriv k3 = full_rhs(advance(s, k2, dt / 2), cmd, ext_tau, p, lim);
  const Deriv k4 = full_rhs(advance(s, k3, dt), cmd, ext_tau, p, lim);

  Deriv sum{};
  sum.dx = (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx) / 6.0;
  sum.dy = (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy) / 6.0;
  sum.dpsi = (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi) / 6.0;
  sum.dvarphi_b =
      (k1.dvarphi_b + 2 * k2.dvarphi_b + 2 * k3.dvarphi_b + k4.dvarphi_b) / 6.0;
  sum.ddot_varphi_b = (k1.ddot_varphi_b + 2 * k2.ddot_varphi_b +
                       2 * k3.ddot_varphi_b + k4.ddot_varphi_b) /
                      6.0;
  sum.dv = (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv) / 6.0;
  sum.ddot_v = (k1.ddot_v + 2 * k2.ddot_v + 2 * k3.ddot_v + k4.ddot_v) / 6.0;
  sum.dphi = (k1.dphi + 2 * k2.dphi + 2 * k3.dphi + k4.dphi) / 6.0;

  BikebotState n = advance(s, sum, dt);
  n.t = s.t + dt;

  // Physical saturation of the drive and steering hardware.
  n.v = clamp(n.v, 0.0, lim.v_max);
  n.dot_v = clamp(n.dot_v, -lim.dot_v_max, lim.dot_v_max);
  n.phi = clamp(n.phi, -lim.phi_max, lim.phi_max);

  if (std::abs(n.varphi_b) >= M_PI / 2)
    throw BalanceLost("step: |varphi_b| reached 90 deg");
  return n;
}

}  // namespace bikecross
