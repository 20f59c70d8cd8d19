#include "bikecross/eic.hpp"

#include <algorithm>
#include <cmath>

#include "bikecross/dynamics.hpp"
#include "bikecross/errors.hpp"

namespace bikecross {

namespace {

constexpr double kPi = 3.14159265358979323846;

double manifold_residual(double phi, double u_psi, double psi_dot, double v,
                         const BikebotParams& p) {
  return f1_roll(phi, psi_dot, v, p) + h_roll(phi, p) * u_psi;
}

double manifold_slope(double phi, double u_psi, double psi_dot, double v,
                      const BikebotParams& p) {
  const double s = std::sin(phi), c = std::cos(phi);
  const double df1 = -p.m_b * p.h_G * psi_dot * v * s +
                     p.m_b * p.h_G * p.h_G * psi_dot * psi_dot * (c * c - s * s) +
                     p.m_b * kGravity * p.h_G * c;
  const double dh = -p.m_b * p.h_G * (p.l_G + 0.5 * p.l) * s;
  return df1 + dh * u_psi;
}

double bisect(double lo, double hi, double g_lo, double u_psi, double psi_dot,
              double v, const BikebotParams& p) {
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = manifold_residual(mid, u_psi, psi_dot, v, p);
    if (g_mid == 0.0) return mid;
    if ((g_lo < 0) == (g_mid < 0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void ControllerGains::validate() const {
  if (!(a0 > 0 && a1 > 0 && a2 > 0 && b0 > 0 && b1 > 0)) {
    throw ValidationError("controller gains must all be positive");
  }
}

void EicConfig::validate() const {
  if (!(dt_ctrl > 0 && dt_ctrl <= 0.1)) {
    throw ValidationError("controller period must be in (0, 0.1] s");
  }
  if (!(manifold_filter_hz > 0)) {
    throw ValidationError("manifold filter cutoff must be positive");
  }
  if (!(yaw_cmd_horizon >= 0) || !(u_psi_max > 0)) {
    throw ValidationError("yaw command horizon must be >= 0 and u_psi_max > 0");
  }
  if (!(manifold_bracket > 0 && manifold_bracket < 0.5 * kPi)) {
    throw ValidationError("manifold bracket must be in (0, 90 deg)");
  }
}

EicController::EicController(const BikebotParams& p, const ActuatorLimits& lim,
                             const ControllerGains& g, const EicConfig& cfg)
    : p_(p), lim_(lim), gains_(g), cfg_(cfg) {
  p_.validate();
  lim_.validate();
  gains_.validate();
  cfg_.validate();
}

void EicController::reset() {
  dbg_ = EicDebug{};
  prev_cmd_ = ActuatorCommand{0.0, 0.0};
  prev_root_ = rate_f_ = acc_f_ = prev_rate_ = 0.0;
  first_ = true;
}

double EicController::filter_alpha() const {
  const double tau = 1.0 / (2.0 * kPi * cfg_.manifold_filter_hz);
  return cfg_.dt_ctrl / (cfg_.dt_ctrl + tau);
}

Eigen::Vector2d EicController::tracking_control(const BikebotState& s,
                                                const RefPoint& rp,
                                                const ControllerGains& g,
                                                const BikebotParams& p) {
  const double psi_dot = yaw_rate(s, p);
  const double c = std::cos(s.psi), sn = std::sin(s.psi);
  Eigen::Matrix2d K;
  K << c, -s.v * sn, sn, s.v * c;
  const double det = K.determinant();
  if (std::abs(det) < 1e-3) {
    throw SingularKpsi("decoupling matrix near singular (|det| = |v| < 1e-3)");
  }
  const Eigen::Vector2d r(s.x, s.y);
  const Eigen::Vector2d rdot(s.v * c, s.v * sn);
  const Eigen::Vector2d rddot(s.dot_v * c - s.v * psi_dot * sn,
                              s.dot_v * sn + s.v * psi_dot * c);
  const Eigen::Vector2d e = r - rp.r;
  const Eigen::Vector2d ed = rdot - rp.rd;
  const Eigen::Vector2d edd = rddot - rp.rdd;
  const Eigen::Vector2d u_r = rp.rddd - g.a2 * edd - g.a1 * ed - g.a0 * e;
  const Eigen::Vector2d R(s.v * psi_dot * c + 2.0 * s.dot_v * sn,
                          s.v * psi_dot * sn - 2.0 * s.dot_v * c);
  Eigen::Matrix2d Kinv;
  Kinv << K(1, 1), -K(0, 1), -K(1, 0), K(0, 0);
  return (Kinv / det) * (R * psi_dot + u_r);
}

double EicController::balance_manifold(double u_psi, double psi_dot, double v,
                                       const BikebotParams& p, double prev_root,
                                       double bracket) {
  if (!(std::abs(u_psi) <= 50.0)) {
    throw ValidationError("manifold solver requires |u_psi| <= 50 rad/s^2");
  }
  const double B = bracket;
  // Newton from the previous root, safeguarded to stay inside the bracket.
  double x = std::clamp(prev_root, -B, B);
  bool newton_ok = false;
  for (int it = 0; it < 60; ++it) {
    const double g = manifold_residual(x, u_psi, psi_dot, v, p);
    if (std::abs(g) < 1e-11) {
      newton_ok = true;
      break;
    }
    const double gp = manifold_slope(x, u_psi, psi_dot, v, p);
    if (std::abs(gp) < 1e-9) break;
    const double x_next = x - g / gp;
    if (!std::isfinite(x_next) || std::abs(x_next) > B) break;
    if (std::abs(x_next - x) < 1e-15) {
      x = x_next;
      newton_ok = std::abs(manifold_residual(x, u_psi, psi_dot, v, p)) < 1e-9;
      break;
    }
    x = x_next;
  }
  if (newton_ok) return x;

  // Fallback: scan for sign changes and bisect; pick the root nearest the
  // previous one so the manifold stays continuous along a trajectory.
  constexpr int kScan = 90;
  double best = 0.0, best_dist = -1.0;
  double a = -B, g_a = manifold_residual(a, u_psi, psi_dot, v, p);
  for (int i = 1; i <= kScan; ++i) {
    const double b = -B + 2.0 * B * i / kScan;
    const double g_b = manifold_residual(b, u_psi, psi_dot, v, p);
    if (g_a == 0.0 || (g_a < 0) != (g_b < 0)) {
      const double r = (g_a == 0.0) ? a : bisect(a, b, g_a, u_psi, psi_dot, v, p);
      const double d = std::abs(r - prev_root);
      if (best_dist < 0 || d < best_dist) {
        best_dist = d;
        best = r;
      }
    }
    a = b;
    g_a = g_b;
  }
  if (best_dist < 0) {
    throw NoRoot("no balance equilibrium inside the roll bracket");
  }
  return best;
}

double EicController::balance_manifold(double u_psi, const BikebotState& s,
                                       const BikebotParams& p, double prev_root,
                                       double bracket) {
  return balance_manifold(u_psi, yaw_rate(s, p), s.v, p, prev_root, bracket);
}

double EicController::balance_control(double varphi_b, double dot_varphi_b,
                                      double psi_dot, double v, double phi_b_e,
                                      double dphi_b_e, double ddphi_b_e,
                                      const ControllerGains& g,
                                      const BikebotParams& p) {
  const double h = h_roll(varphi_b, p);
  if (std::abs(h) <= 1e-4) {
    throw HSingular("roll input coefficient h(varphi_b) near zero");
  }
  const double e_b = varphi_b - phi_b_e;
  const double ed_b = dot_varphi_b - dphi_b_e;
  const double u_b = ddphi_b_e - g.b1 * ed_b - g.b0 * e_b;
  return (p.j_t() * u_b - f1_roll(varphi_b, psi_dot, v, p)) / h;
}

ActuatorCommand EicController::tick(const BikebotState& s,
                                    const ReferenceTrajectory& ref) {
  dbg_ = EicDebug{};
  try {
    const double psi_dot = yaw_rate(s, p_);
    const RefPoint rp = ref.eval(s.t);
    const Eigen::Vector2d u = tracking_control(s, rp, gains_, p_);
    const double u_psi_t = std::clamp(u[1], -cfg_.u_psi_max, cfg_.u_psi_max);
    double root = balance_manifold(u_psi_t, psi_dot, s.v, p_, prev_root_,
                                   cfg_.manifold_bracket);
    // Steering can hold a lean only up to the yaw rate it can produce at the
    // current speed; cap the manifold target to that sustainable band so the
    // balance loop never chases an equilibrium beyond actuator authority
    // (otherwise turn acquisition winds the steer into its travel clamp).
    const double v_cap = std::max(s.v, lim_.v_min);
    const double psi_dot_reach =
        v_cap * std::cos(p_.epsilon) * std::tan(lim_.phi_max) / p_.l;
    // 0.6 keeps steering authority in reserve: a target at the exact
    // boundary leaves no margin to recover the roll overshoot it causes.
    const double lean_cap = std::atan(0.6 * psi_dot_reach * v_cap / kGravity);
    root = std::clamp(root, -lean_cap, lean_cap);
    double rate = 0.0, acc = 0.0;
    if (!first_) {
      const double alpha = filter_alpha();
      rate = rate_f_ + alpha * ((root - prev_root_) / cfg_.dt_ctrl - rate_f_);
      acc = acc_f_ + alpha * ((rate - prev_rate_) / cfg_.dt_ctrl - acc_f_);
    }
    const double u_bar = balance_control(s.varphi_b, s.dot_varphi_b, psi_dot,
                                         s.v, root, rate, acc, gains_, p_);
    const double psi_dot_des = psi_dot + u_bar * cfg_.yaw_cmd_horizon;
    const double v_eff = std::max(s.v, lim_.v_min);
    const double phi_raw = std::atan(psi_dot_des * p_.l * std::cos(s.varphi_b) /
                                     (v_eff * std::cos(p_.epsilon)));
    const double phi_cmd =
        steering_from_yawrate(psi_dot_des, v_eff, s.varphi_b, p_, lim_);
    const double u_v = std::clamp(u[0], -lim_.u_v_max, lim_.u_v_max);

    rate_f_ = rate;
    acc_f_ = acc;
    prev_rate_ = rate;
    prev_root_ = root;
    first_ = false;

    dbg_.e_r = Eigen::Vector2d(s.x, s.y) - rp.r;
    dbg_.ed_r = Eigen::Vector2d(s.v * std::cos(s.psi), s.v * std::sin(s.psi)) - rp.rd;
    dbg_.u_v_raw = u[0];
    dbg_.u_psi_track = u[1];
    dbg_.phi_b_e = root;
    dbg_.dphi_b_e = rate;
    dbg_.ddphi_b_e = acc;
    dbg_.e_b = s.varphi_b - root;
    dbg_.ed_b = s.dot_varphi_b - rate;
    dbg_.u_psi_bar = u_bar;
    dbg_.psi_dot = psi_dot;
    dbg_.psi_dot_des = psi_dot_des;
    dbg_.phi_raw = phi_raw;
    dbg_.held = false;

    prev_cmd_ = ActuatorCommand{u_v, phi_cmd};
    return prev_cmd_;
  } catch (const Error&) {
    dbg_.held = true;
    return prev_cmd_;
  }
}

}  // namespace bikecross
