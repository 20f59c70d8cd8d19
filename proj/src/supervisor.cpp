#include "bikecross/supervisor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bikecross/csv.hpp"
#include "bikecross/dynamics.hpp"
#include "bikecross/errors.hpp"

namespace bikecross {

void SupervisorConfig::validate() const {
  if (!(a_x_max > 0 && varphi_b_max > 0 && delta_t >= 0 && debounce >= 0 &&
        recovery_timeout > 0 && roa_v_tol > 0)) {
    throw ValidationError("supervisor config fields must be positive");
  }
}

void RoaGridSpec::validate() const {
  if (!(phi_b_max > 0 && rate_max > 0 && sim_time > 0 && v_nominal > 0)) {
    throw ValidationError("roa grid ranges must be positive");
  }
  if (n_phi < 3 || n_rate < 3 || n_phi * n_rate > 10000) {
    throw ValidationError("roa grid must have 3..100 cells per axis and at most 1e4 total");
  }
}

const char* to_string(FsmMode m) {
  switch (m) {
    case FsmMode::Tracking: return "Tracking";
    case FsmMode::ImpactDetected: return "ImpactDetected";
    case FsmMode::ImpulseActive: return "ImpulseActive";
    case FsmMode::Recovery: return "Recovery";
    case FsmMode::Failed: return "Failed";
  }
  return "?";
}

bool detect_impact(double accel_x, bool geometric_hit,
                   const SupervisorConfig& cfg) {
  return std::abs(accel_x) > cfg.a_x_max || geometric_hit;
}

double predict_roll(const BikebotState& s, const EicController& ctrl,
                    const ReferenceTrajectory& ref, double delta_t,
                    const ActuatorLimits& lim) {
  double mx = std::abs(s.varphi_b);
  if (delta_t <= 0) return mx;
  EicController c = ctrl;  // snapshot copy
  BikebotState sim = s;
  ActuatorCommand cmd{0.0, sim.phi};
  const double dt = 1e-3;
  const int ctrl_every = std::max(1, static_cast<int>(std::round(c.config().dt_ctrl / dt)));
  const int n = static_cast<int>(std::round(delta_t / dt));
  try {
    for (int k = 0; k < n; ++k) {
      if (k % ctrl_every == 0) cmd = c.tick(sim, ref);
      sim = step(sim, cmd, RollTorquePort{}, dt, c.params(), lim);
      mx = std::max(mx, std::abs(sim.varphi_b));
    }
  } catch (const Error&) {
    // A diverging prediction is itself the answer: report the excursion.
  }
  return mx;
}

namespace {

bool roa_cell_member(double phi_b0, double rate0, const BikebotParams& p,
                     const ActuatorLimits& lim, const ControllerGains& gains,
                     const EicConfig& eic_cfg, const RoaGridSpec& spec) {
  const ReferenceTrajectory ref =
      ReferenceTrajectory::line({0, 0}, 0.0, spec.v_nominal);
  BikebotState s;
  s.varphi_b = phi_b0;
  s.dot_varphi_b = rate0;
  s.v = spec.v_nominal;
  EicController ctrl(p, lim, gains, eic_cfg);
  ActuatorCommand cmd{0.0, 0.0};
  const double dt = 1e-3;
  const int ctrl_every = static_cast<int>(std::round(eic_cfg.dt_ctrl / dt));
  const int n = static_cast<int>(std::round(spec.sim_time / dt));
  try {
    for (int k = 0; k < n; ++k) {
      if (k % ctrl_every == 0) cmd = ctrl.tick(s, ref);
      // The loop runs with the steer travel and speed limits active, so the
      // membership question is simply whether the constrained controller
      // brings the roll back; limit violations cannot occur, only falls.
      s = step(s, cmd, RollTorquePort{}, dt, p, lim);
      if (std::abs(s.varphi_b) > deg2rad(60.0)) return false;
      if (s.v > lim.v_max + 1e-9) return false;
    }
  } catch (const Error&) {
    return false;
  }
  return std::abs(s.varphi_b) < deg2rad(1.0);
}

std::string roa_cache_key(const BikebotParams& p, const ActuatorLimits& lim,
                          const ControllerGains& g, const EicConfig& e,
                          const RoaGridSpec& spec) {
  std::ostringstream ss;
  ss.precision(17);
  ss << p.m_b << ',' << p.J_b << ',' << p.J_z << ',' << p.l << ',' << p.R_w
     << ',' << p.l_G << ',' << p.h_G << ',' << p.epsilon << '|' << lim.phi_max
     << ',' << lim.v_max << ',' << lim.v_min << ',' << lim.dot_v_max << ','
     << lim.u_v_max << ',' << lim.steer_lag << ',' << lim.steer_rate_max << '|'
     << g.a0 << ',' << g.a1 << ',' << g.a2 << ',' << g.b0 << ',' << g.b1 << '|'
     << e.dt_ctrl << ',' << e.manifold_filter_hz << ',' << e.yaw_cmd_horizon
     << '|' << spec.phi_b_max << ',' << spec.rate_max << ',' << spec.n_phi
     << ',' << spec.n_rate << ',' << spec.sim_time << ',' << spec.v_nominal;
  return ss.str();
}

}  // namespace

RoaGrid estimate_roa(const BikebotParams& p, const ActuatorLimits& lim,
                     const ControllerGains& gains, const EicConfig& eic_cfg,
                     const RoaGridSpec& spec) {
  spec.validate();
  static std::map<std::string, RoaGrid> cache;
  const std::string key = roa_cache_key(p, lim, gains, eic_cfg, spec);
  const auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  RoaGrid grid;
  grid.spec = spec;
  grid.member.assign(static_cast<std::size_t>(spec.n_phi) * spec.n_rate, 0);
  for (int i = 0; i < spec.n_phi; ++i) {
    for (int j = 0; j < spec.n_rate; ++j) {
      const bool m = roa_cell_member(grid.phi_at(i), grid.rate_at(j), p, lim,
                                     gains, eic_cfg, spec);
      grid.member[static_cast<std::size_t>(i) * spec.n_rate + j] = m ? 1 : 0;
    }
  }
  cache[key] = grid;
  return grid;
}

bool in_roa(const RoaGrid& grid, double varphi_b, double dot_varphi_b) {
  const RoaGridSpec& sp = grid.spec;
  const double fx =
      (varphi_b + sp.phi_b_max) / (2.0 * sp.phi_b_max) * (sp.n_phi - 1);
  const double fy =
      (dot_varphi_b + sp.rate_max) / (2.0 * sp.rate_max) * (sp.n_rate - 1);
  const int i = static_cast<int>(std::floor(fx));
  const int j = static_cast<int>(std::floor(fy));
  // Conservative cell lookup: every corner of the cell containing the point
  // must be a member, so points on boundary or mixed cells report false and
  // out-of-range points count as non-members.
  for (int di = 0; di <= 1; ++di) {
    for (int dj = 0; dj <= 1; ++dj) {
      const int ci = i + di, cj = j + dj;
      if (ci < 0 || cj < 0 || ci >= sp.n_phi || cj >= sp.n_rate) return false;
      if (!grid.at(ci, cj)) return false;
    }
  }
  return true;
}

std::string roa_to_csv(const RoaGrid& grid) {
  CsvBuilder csv({"phi_b_deg", "dot_phi_b_deg_s", "member"});
  for (int i = 0; i < grid.spec.n_phi; ++i) {
    for (int j = 0; j < grid.spec.n_rate; ++j) {
      csv.row({format_double(rad2deg(grid.phi_at(i))),
               format_double(rad2deg(grid.rate_at(j))),
               grid.at(i, j) ? "1" : "0"});
    }
  }
  return csv.str();
}

Supervisor::Supervisor(const SupervisorConfig& cfg,
                       const ImpulseConfig& impulse_cfg, const BikebotParams& p,
                       const ActuatorLimits& lim, const ControllerGains& gains,
                       const EicConfig& eic_cfg, const LegGeometry& geom,
                       const RoaGrid* roa, bool impulse_enabled)
    : cfg_(cfg),
      impulse_cfg_(impulse_cfg),
      p_(p),
      lim_(lim),
      gains_(gains),
      eic_cfg_(eic_cfg),
      geom_(geom),
      roa_(roa),
      impulse_enabled_(impulse_enabled) {
  cfg_.validate();
  impulse_cfg_.validate();
}

bool Supervisor::transition(FsmMode to) {
  if (to == FsmMode::Failed) {
    mode_ = FsmMode::Failed;
    return true;
  }
  bool legal = false;
  switch (mode_) {
    case FsmMode::Tracking:
      legal = (to == FsmMode::ImpactDetected);
      break;
    case FsmMode::ImpactDetected:
      legal = (to == FsmMode::Tracking || to == FsmMode::ImpulseActive);
      break;
    case FsmMode::ImpulseActive:
      legal = (to == FsmMode::Recovery);
      break;
    case FsmMode::Recovery:
      legal = (to == FsmMode::Tracking);
      break;
    case FsmMode::Failed:
      legal = false;
      break;
  }
  if (legal) mode_ = to;
  return legal;
}

void Supervisor::fail(const std::string& why) {
  fail_note_ = why;
  transition(FsmMode::Failed);
}

bool Supervisor::trusted_roa(const BikebotState& s) const {
  if (roa_ == nullptr) return false;
  if (std::abs(s.v - roa_->spec.v_nominal) > cfg_.roa_v_tol) return false;
  return in_roa(*roa_, s.varphi_b, s.dot_varphi_b);
}

SupervisorDecision Supervisor::supervise(const BikebotState& s,
                                         const EicController& ctrl,
                                         const ReferenceTrajectory& ref,
                                         double accel_x, bool geometric_hit) {
  SupervisorDecision out;
  out.mode = mode_;
  if (mode_ == FsmMode::Failed) {
    out.note = fail_note_;
    return out;
  }
  try {
    const bool raw_detect = detect_impact(accel_x, geometric_hit, cfg_);
    const bool debounced =
        raw_detect && (s.t - last_detect_t_ >= cfg_.debounce);
    if (debounced) {
      last_detect_t_ = s.t;
      // Latched until a Tracking tick can process it, so impacts arriving
      // mid-recovery are not lost.
      pending_detect_ = true;
    }

    switch (mode_) {
      case FsmMode::Tracking:
        if (pending_detect_) {
          pending_detect_ = false;
          transition(FsmMode::ImpactDetected);
        }
        break;

      case FsmMode::ImpactDetected: {
        // Decide on the tick after detection: predict the excursion, gate on
        // the region of attraction, and fire at most one impulse.
        out.predicted_roll =
            predict_roll(s, ctrl, ref, cfg_.delta_t, lim_);
        const bool inside = trusted_roa(s);
        const bool need = out.predicted_roll > cfg_.varphi_b_max && !inside;
        if (impulse_enabled_ && need && s.dot_varphi_b != 0.0) {
          const ReinitDecision rd = optimize_reinit(s, ref, impulse_cfg_, p_,
                                                    lim_, gains_, eic_cfg_);
          const TorqueResult tr = impulse_torque(rd.dot_varphi_b_plus,
                                                 s.dot_varphi_b, impulse_cfg_, p_);
          if (std::abs(tr.delta_tau_x) > 1e-6) {
            ImpulseCommand cmd =
                leg_command(tr.delta_tau_x, impulse_cfg_, s.varphi_b, geom_);
            cmd.t_tau = s.t;
            cmd.t_tau_plus = s.t + impulse_cfg_.kappa;
            out.fired = true;
            out.command = cmd;
            out.reinit = rd;
            out.pre_phi_b = s.varphi_b;
            out.pre_rate = s.dot_varphi_b;
            out.min_impulse_bound = min_impulse(s.varphi_b, s.dot_varphi_b,
                                                s.v, impulse_cfg_, p_);
            out.necessary_condition = check_necessary_condition(
                s.varphi_b, s.dot_varphi_b, tr.delta_tau_x, s.v, impulse_cfg_,
                p_);
            impulse_end_t_ = cmd.t_tau_plus;
            transition(FsmMode::ImpulseActive);
            break;
          }
        }
        transition(FsmMode::Tracking);
        break;
      }

      case FsmMode::ImpulseActive:
        if (s.t >= impulse_end_t_ - 1e-12) {
          recovery_start_t_ = s.t;
          transition(FsmMode::Recovery);
        }
        break;

      case FsmMode::Recovery: {
        const bool inside = trusted_roa(s);
        const bool timed_out = s.t - recovery_start_t_ > cfg_.recovery_timeout;
        // A latched detection also releases Recovery so the next tick can
        // process the new impact from Tracking.
        if (inside || timed_out || pending_detect_) {
          transition(FsmMode::Tracking);
        }
        break;
      }

      case FsmMode::Failed:
        break;
    }
  } catch (const Error& e) {
    fail(e.what());
    out.note = fail_note_;
  }
  out.mode = mode_;
  return out;
}

}  // namespace bikecross
