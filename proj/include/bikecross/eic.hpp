#pragma once

#include <Eigen/Dense>

#include "bikecross/params.hpp"
#include "bikecross/reference.hpp"
#include "bikecross/state.hpp"

namespace bikecross {

struct ControllerGains {
  // Tracking gains for the third-order position-error dynamics.
  double a0 = 10.0;
  double a1 = 6.0;
  double a2 = 3.0;
  // Balance gains for the second-order roll-error dynamics.
  double b0 = 180.0;
  double b1 = 25.0;
  void validate() const;
};

struct EicConfig {
  double dt_ctrl = 0.02;             // controller period (s)
  double manifold_filter_hz = 10.0;  // LPF cutoff for manifold derivatives
  double yaw_cmd_horizon = 0.04;     // seconds of yaw-accel lookahead folded
                                     // into the yaw-rate set-point; compensates
                                     // the steering actuator lag
  double u_psi_max = 50.0;           // yaw-accel magnitude accepted by the
                                     // manifold solver (rad/s^2)
  double manifold_bracket = deg2rad(45.0);
  void validate() const;
};

// Per-tick internals exposed for logging, rollout costs, and gating.
struct EicDebug {
  Eigen::Vector2d e_r{0, 0};
  Eigen::Vector2d ed_r{0, 0};
  double u_v_raw = 0;
  double u_psi_track = 0;
  double phi_b_e = 0;
  double dphi_b_e = 0;
  double ddphi_b_e = 0;
  double e_b = 0;
  double ed_b = 0;
  double u_psi_bar = 0;
  double psi_dot = 0;
  double psi_dot_des = 0;
  double phi_raw = 0;  // steer request before the angle clamp
  bool held = false;   // true when a singularity forced a command hold
};

// External-convergence-based tracking + balance controller. Copyable: a
// copy snapshots the root-tracking and filter state, so short prediction
// rollouts can run without disturbing the live controller.
class EicController {
 public:
  EicController(const BikebotParams& p, const ActuatorLimits& lim,
                const ControllerGains& g = {}, const EicConfig& cfg = {});

  // One controller tick at the state's timestamp. On any singularity the
  // previous command is held and debug().held is set.
  ActuatorCommand tick(const BikebotState& s, const ReferenceTrajectory& ref);

  void reset();
  const EicDebug& debug() const { return dbg_; }
  const ControllerGains& gains() const { return gains_; }
  const EicConfig& config() const { return cfg_; }
  const BikebotParams& params() const { return p_; }
  const ActuatorLimits& limits() const { return lim_; }

  // u = (u_v, u_psi) solving K_psi u = R_psi psi_dot + u_r, where u_r places
  // the position-error dynamics at e^(3) + a2*edd + a1*ed + a0*e = 0.
  static Eigen::Vector2d tracking_control(const BikebotState& s,
                                          const RefPoint& rp,
                                          const ControllerGains& g,
                                          const BikebotParams& p);

  // Equilibrium roll: root of f1(phi) + h(phi)*u_psi = 0 inside the bracket,
  // tracked from prev_root for continuity along a trajectory.
  static double balance_manifold(double u_psi, double psi_dot, double v,
                                 const BikebotParams& p, double prev_root = 0.0,
                                 double bracket = deg2rad(45.0));
  static double balance_manifold(double u_psi, const BikebotState& s,
                                 const BikebotParams& p, double prev_root = 0.0,
                                 double bracket = deg2rad(45.0));

  // Yaw acceleration that makes the roll error follow
  // edd_b + b1*ed_b + b0*e_b = 0 about the supplied manifold point.
  static double balance_control(double varphi_b, double dot_varphi_b,
                                double psi_dot, double v, double phi_b_e,
                                double dphi_b_e, double ddphi_b_e,
                                const ControllerGains& g,
                                const BikebotParams& p);

 private:
  BikebotParams p_;
  ActuatorLimits lim_;
  ControllerGains gains_;
  EicConfig cfg_;
  EicDebug dbg_;
  ActuatorCommand prev_cmd_{0.0, 0.0};
  double prev_root_ = 0.0;
  double rate_f_ = 0.0;
  double acc_f_ = 0.0;
  double prev_rate_ = 0.0;
  bool first_ = true;

  double filter_alpha() const;
};

}  // namespace bikecross
