#include "bikecross/impulse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bikecross/dynamics.hpp"
#include "bikecross/errors.hpp"

namespace bikecross {

namespace {

// Joint torques for a contact force expressed in H, without the cap check.
Eigen::Vector3d raw_torques(const Eigen::Matrix3d& J, double varphi_b,
                            const Eigen::Vector3d& force_h) {
  return J.transpose() * rot_body_to_horizontal(varphi_b).transpose() * force_h;
}

// min ||f||^2 over f = (F_x, F_y) subject to |tau_0 + C f|_inf <= cap.
// Two variables and six half-planes: enumerate the unconstrained point, the
// projections onto each constraint line, and all pairwise vertices. Exact
// and deterministic. Returns false when the feasible set is empty.
bool min_norm_horizontal(const Eigen::Vector3d& tau0,
                         const Eigen::Matrix<double, 3, 2>& C, double cap,
                         Eigen::Vector2d* out) {
  std::vector<Eigen::Vector2d> normals;
  std::vector<double> offsets;  // a^T f <= b
  for (int j = 0; j < 3; ++j) {
    const Eigen::Vector2d a = C.row(j).transpose();
    normals.push_back(a);
    offsets.push_back(cap - tau0[j]);
    normals.push_back(-a);
    offsets.push_back(cap + tau0[j]);
  }
  const auto feasible = [&](const Eigen::Vector2d& f) {
    for (std::size_t k = 0; k < normals.size(); ++k) {
      if (normals[k].dot(f) > offsets[k] + 1e-9) return false;
    }
    return true;
  };

  bool found = false;
  double best_n2 = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  const auto consider = [&](const Eigen::Vector2d& f) {
    if (!f.allFinite() || !feasible(f)) return;
    const double n2 = f.squaredNorm();
    if (n2 < best_n2) {
      best_n2 = n2;
      best = f;
      found = true;
    }
  };

  consider(Eigen::Vector2d::Zero());
  for (std::size_t k = 0; k < normals.size(); ++k) {
    const double n2 = normals[k].squaredNorm();
    if (n2 < 1e-16) continue;
    consider(normals[k] * (offsets[k] / n2));
  }
  for (std::size_t k = 0; k < normals.size(); ++k) {
    for (std::size_t m = k + 1; m < normals.size(); ++m) {
      Eigen::Matrix2d A;
      A.row(0) = normals[k].transpose();
      A.row(1) = normals[m].transpose();
      if (std::abs(A.determinant()) < 1e-12) continue;
      consider(A.inverse() * Eigen::Vector2d(offsets[k], offsets[m]));
    }
  }
  if (found) *out = best;
  return found;
}

}  // namespace

void ImpulseConfig::validate() const {
  if (!(kappa > 0 && horizon > 0 && delta_tau_x_max > 0 && f_z_max > 0)) {
    throw ValidationError("impulse config: caps and windows must be positive");
  }
  if (!(v_max > 0 && v_min >= 0 && v_min <= v_max) ||
      !(phi_max > 0 && phi_max < M_PI / 2) || !(r_iy > 0)) {
    throw ValidationError("impulse config: invalid box bounds");
  }
  if ((p_diag.array() <= 0).any() || (q_diag.array() <= 0).any()) {
    throw ValidationError("impulse config: P and Q diagonals must be positive");
  }
}

double ImpulseConfig::max_rate_jump(const BikebotParams& p) const {
  return std::min(delta_tau_x_max, f_z_max * r_iy) * kappa / p.j_t();
}

double k1_const(const BikebotParams& p) {
  return std::sqrt(p.m_b * p.h_G * kGravity / p.j_t());
}

double k2_const(double v, const BikebotParams& p) {
  return p.m_b * p.h_G * v * v / (p.j_t() * p.l);
}

double k3_const(double v, const BikebotParams& p) {
  return k2_const(v, p) / k1_const(p);
}

double roll_closed_form(double t, double phi_b0, double dphi_b0,
                        double phi_steer, double v, const BikebotParams& p) {
  const double k1 = k1_const(p);
  const double phi_star = k2_const(v, p) * std::tan(phi_steer) / (k1 * k1);
  return phi_star + (phi_b0 - phi_star) * std::cosh(k1 * t) +
         dphi_b0 / k1 * std::sinh(k1 * t);
}

TorqueResult impulse_torque(double target_rate, double pre_rate,
                            const ImpulseConfig& cfg, const BikebotParams& p) {
  cfg.validate();
  TorqueResult r;
  const double raw = p.j_t() * (target_rate - pre_rate) / cfg.kappa;
  r.clamped = std::abs(raw) > cfg.delta_tau_x_max;
  r.delta_tau_x = std::clamp(raw, -cfg.delta_tau_x_max, cfg.delta_tau_x_max);
  return r;
}

ImpulseCommand leg_command(double delta_tau_x, const ImpulseConfig& cfg,
                           double varphi_b, const LegGeometry& geom) {
  cfg.validate();
  if (!std::isfinite(delta_tau_x) || delta_tau_x == 0.0) {
    throw ValidationError("leg command requires a nonzero finite roll torque");
  }
  ImpulseCommand out;
  out.delta_tau_x = delta_tau_x;
  out.side = (delta_tau_x >= 0) ? LegSide::Left : LegSide::Right;
  const double y_c = (out.side == LegSide::Left) ? cfg.r_iy : -cfg.r_iy;
  out.f_z = delta_tau_x / y_c;
  if (out.f_z > cfg.f_z_max) {
    throw ForceLimit("required vertical contact force above the cap");
  }

  const Eigen::Vector3d target(0.0, y_c, 0.0);
  const JointState pose = inverse_kinematics(target, varphi_b, out.side, geom);
  out.theta = pose.theta;

  const Eigen::Matrix3d J = leg_jacobian(pose, geom);
  Eigen::Vector3d force(0.0, 0.0, out.f_z);
  Eigen::Vector3d tau = raw_torques(J, varphi_b, force);
  if (tau.cwiseAbs().maxCoeff() > geom.tau_max) {
    Eigen::Matrix<double, 3, 2> C;
    C.col(0) = raw_torques(J, varphi_b, Eigen::Vector3d(1, 0, 0));
    C.col(1) = raw_torques(J, varphi_b, Eigen::Vector3d(0, 1, 0));
    Eigen::Vector2d f_h;
    if (!min_norm_horizontal(tau, C, geom.tau_max, &f_h)) {
      throw TorqueLimit("no horizontal force redistribution satisfies the caps");
    }
    force.x() = f_h.x();
    force.y() = f_h.y();
  }
  out.force_h = force;
  out.tau_theta = torques_from_force(force, pose, varphi_b, geom);
  out.delta_tau = applied_torque(target, force);
  return out;
}

double min_impulse(double phi_b_pre, double dphi_b_pre, double v,
                   const ImpulseConfig& cfg, const BikebotParams& p) {
  const double k3 = k3_const(v, p);
  return std::abs(phi_b_pre + dphi_b_pre + k3 * std::tan(cfg.phi_max)) /
         (cfg.kappa * p.j_t());
}

bool check_necessary_condition(double phi_b_pre, double dphi_b_pre,
                               double delta_tau_x, double v,
                               const ImpulseConfig& cfg,
                               const BikebotParams& p) {
  if (dphi_b_pre == 0.0) {
    throw ZeroRate("necessary condition undefined at zero roll rate");
  }
  const double sgn = (dphi_b_pre > 0) ? 1.0 : -1.0;
  const double k3 = k3_const(v, p);
  return sgn * (phi_b_pre + dphi_b_pre + k3 * std::tan(cfg.phi_max) +
                cfg.kappa * p.j_t() * delta_tau_x) < 0.0;
}

namespace {

struct RolloutResult {
  double cost = 0.0;       // integrated cost plus soft penalties
  bool hard_fail = false;  // diverged or threw: candidate rejected
  bool clean = true;       // no soft violation either
};

RolloutResult rollout_cost(BikebotState s, const ReferenceTrajectory& ref,
                           const ImpulseConfig& cfg, const BikebotParams& p,
                           const ActuatorLimits& lim,
                           const ControllerGains& gains,
                           const EicConfig& eic_cfg) {
  RolloutResult r;
  EicController ctrl(p, lim, gains, eic_cfg);
  const double dt = 0.02;
  const int n = static_cast<int>(std::round(cfg.horizon / dt));
  const Eigen::Matrix<double, 6, 1>& P = cfg.p_diag;
  const Eigen::Vector2d& Q = cfg.q_diag;
  double last_stage = 0.0;
  try {
    for (int k = 0; k < n; ++k) {
      const ActuatorCommand cmd = ctrl.tick(s, ref);
      const EicDebug& d = ctrl.debug();
      double stage = last_stage;
      if (!d.held) {
        Eigen::Matrix<double, 6, 1> xe;
        xe << d.e_r, d.ed_r, d.e_b, d.ed_b;
        const Eigen::Vector2d u(cmd.u_v, d.u_psi_bar);
        stage = xe.dot(P.asDiagonal() * xe) + u.dot(Q.asDiagonal() * u);
        const double excess = std::abs(d.phi_raw) - cfg.phi_max;
        if (excess > 1e-9) {
          r.clean = false;
          r.cost += 1e3 * excess * excess * dt;
        }
      }
      r.cost += stage * dt;
      last_stage = stage;
      s = step(s, cmd, RollTorquePort{}, dt, p, lim);
      if (std::abs(s.varphi_b) > deg2rad(60.0)) {
        r.hard_fail = true;
        return r;
      }
    }
  } catch (const Error&) {
    r.hard_fail = true;
  }
  return r;
}

double ranked_cost(const RolloutResult& r) {
  return r.cost + (r.clean ? 0.0 : 1e6);
}

}  // namespace

ReinitDecision optimize_reinit(const BikebotState& s_post,
                               const ReferenceTrajectory& ref,
                               const ImpulseConfig& cfg, const BikebotParams& p,
                               const ActuatorLimits& lim,
                               const ControllerGains& gains,
                               const EicConfig& eic_cfg) {
  cfg.validate();
  if (!s_post.finite()) {
    throw ValidationError("re-init optimization requires a finite state");
  }

  const double jump = cfg.max_rate_jump(p);
  const double rate0 = s_post.dot_varphi_b;
  // One-sided rate box per the sign rule: the impulse opposes the current
  // roll rate, so the reachable set extends only toward zero and beyond.
  double rate_lo = rate0 - jump, rate_hi = rate0 + jump;
  if (rate0 > 0) rate_hi = rate0;
  if (rate0 < 0) rate_lo = rate0;
  const double v_lo = cfg.v_min, v_hi = std::min(cfg.v_max, lim.v_max);
  if (!(rate_lo <= rate_hi) || !(v_lo <= v_hi)) {
    throw Infeasible("re-init constraint box is empty");
  }

  const auto evaluate = [&](double rate, double v) {
    BikebotState s = s_post;
    s.dot_varphi_b = rate;
    s.v = v;
    return rollout_cost(s, ref, cfg, p, lim, gains, eic_cfg);
  };

  constexpr int kGrid = 21;
  ReinitDecision best;
  bool have_best = false;
  double best_rank = 0.0;
  const auto consider = [&](double rate, double v) {
    const RolloutResult rr = evaluate(rate, v);
    if (rr.hard_fail) return;
    const double rank = ranked_cost(rr);
    if (!have_best || rank < best_rank) {
      have_best = true;
      best_rank = rank;
      best.dot_varphi_b_plus = rate;
      best.v_plus = v;
      best.delta_dot_varphi_b = rate - rate0;
      best.cost = rank;
      best.feasible = rr.clean;
    }
  };

  std::vector<double> rates(kGrid), speeds(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    rates[i] = rate_lo + (rate_hi - rate_lo) * i / (kGrid - 1);
    speeds[i] = v_lo + (v_hi - v_lo) * i / (kGrid - 1);
  }
  for (double rate : rates) {
    for (double v : speeds) consider(rate, v);
  }

  // The as-is candidate: no rate jump, no speed re-init.
  {
    const RolloutResult rr = evaluate(rate0, s_post.v);
    best.no_impulse_cost = rr.hard_fail
                               ? std::numeric_limits<double>::infinity()
                               : ranked_cost(rr);
    if (!rr.hard_fail) consider(rate0, s_post.v);
  }
  if (!have_best) {
    throw Infeasible("every re-init candidate diverged along the rollout");
  }

  // Local refinement: one quadratic fit per axis around the incumbent.
  const double dr = (rate_hi - rate_lo) / (kGrid - 1);
  const double dv = (v_hi - v_lo) / (kGrid - 1);
  const auto refine_axis = [&](bool rate_axis, double h) {
    if (h <= 0) return;
    const double c0 = best.dot_varphi_b_plus, v0 = best.v_plus;
    const auto rank_at = [&](double off) {
      const double rate = rate_axis ? c0 + off : c0;
      const double v = rate_axis ? v0 : v0 + off;
      const RolloutResult rr = evaluate(rate, v);
      return rr.hard_fail ? std::numeric_limits<double>::infinity()
                          : ranked_cost(rr);
    };
    const double fm = rank_at(-h), f0 = best.cost, fp = rank_at(h);
    const double denom = fm - 2 * f0 + fp;
    if (!std::isfinite(fm) || !std::isfinite(fp) || denom <= 0) return;
    const double off = 0.5 * h * (fm - fp) / denom;
    if (!std::isfinite(off) || std::abs(off) > h) return;
    double rate = rate_axis ? c0 + off : c0;
    double v = rate_axis ? v0 : v0 + off;
    rate = std::clamp(rate, rate_lo, rate_hi);
    v = std::clamp(v, v_lo, v_hi);
    consider(rate, v);
  };
  refine_axis(true, dr);
  refine_axis(false, dv);

  return best;
}

}  // namespace bikecross
