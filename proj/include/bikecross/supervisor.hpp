#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bikecross/eic.hpp"
#include "bikecross/impulse.hpp"
#include "bikecross/params.hpp"
#include "bikecross/reference.hpp"
#include "bikecross/state.hpp"

namespace bikecross {

struct SupervisorConfig {
  double a_x_max = 5.0;                  // impact-detection accel threshold (m/s^2)
  double varphi_b_max = deg2rad(5.0);    // max controllable roll (rad)
  double delta_t = 0.2;                  // roll-prediction horizon (s)
  double debounce = 0.1;                 // detection refractory window (s)
  double recovery_timeout = 1.0;         // max dwell in Recovery (s)
  // The attraction grid is computed at one nominal speed; membership is
  // only trusted when the live speed is within this distance of it.
  double roa_v_tol = 0.25;               // (m/s)
  void validate() const;
};

enum class FsmMode { Tracking, ImpactDetected, ImpulseActive, Recovery, Failed };

const char* to_string(FsmMode m);

// Region-of-attraction grid over (varphi_b, dot_varphi_b) for straight-line
// tracking at a fixed nominal speed.
struct RoaGridSpec {
  double phi_b_max = deg2rad(20.0);   // half-range of the roll axis (rad)
  double rate_max = deg2rad(120.0);   // half-range of the rate axis (rad/s)
  int n_phi = 41;
  int n_rate = 41;
  double sim_time = 5.0;              // per-cell rollout duration (s)
  double v_nominal = 1.0;             // straight-line speed (m/s)
  void validate() const;
};

struct RoaGrid {
  RoaGridSpec spec;
  std::vector<std::uint8_t> member;  // row-major [i_phi * n_rate + i_rate]

  bool at(int i_phi, int i_rate) const {
    return member[static_cast<std::size_t>(i_phi) * spec.n_rate + i_rate] != 0;
  }
  double phi_at(int i) const {
    return -spec.phi_b_max + 2.0 * spec.phi_b_max * i / (spec.n_phi - 1);
  }
  double rate_at(int j) const {
    return -spec.rate_max + 2.0 * spec.rate_max * j / (spec.n_rate - 1);
  }
};

// Stateless detection predicate (threshold or geometric contact).
bool detect_impact(double accel_x, bool geometric_hit,
                   const SupervisorConfig& cfg);

// Max |varphi_b| of a closed-loop prediction over [t, t + delta_t]. The
// controller snapshot is copied, so the live controller is untouched. A
// diverging prediction returns the max reached before the rollout aborted.
double predict_roll(const BikebotState& s, const EicController& ctrl,
                    const ReferenceTrajectory& ref, double delta_t,
                    const ActuatorLimits& lim);

// Grid membership by straight-line rollouts; cached per (spec, params,
// gains) within the process. Deterministic.
RoaGrid estimate_roa(const BikebotParams& p, const ActuatorLimits& lim,
                     const ControllerGains& gains, const EicConfig& eic_cfg,
                     const RoaGridSpec& spec);

// Conservative lookup: true only when every corner of the containing cell
// is a member; boundary cells and out-of-bounds points are non-members.
bool in_roa(const RoaGrid& grid, double varphi_b, double dot_varphi_b);

std::string roa_to_csv(const RoaGrid& grid);

// Per-tick supervision outcome consumed by the simulation loop.
struct SupervisorDecision {
  FsmMode mode = FsmMode::Tracking;
  bool fired = false;
  ImpulseCommand command;  // valid when fired
  ReinitDecision reinit;   // valid when fired
  double predicted_roll = 0.0;
  double min_impulse_bound = 0.0;  // valid when fired
  bool necessary_condition = false;
  double pre_phi_b = 0.0, pre_rate = 0.0;  // firing-time roll state
  std::string note;  // diagnostic on Failed transitions
};

// Hybrid FSM: detection debounce, post-impact roll prediction, impulse
// triggering with re-init optimization, and recovery bookkeeping.
class Supervisor {
 public:
  Supervisor(const SupervisorConfig& cfg, const ImpulseConfig& impulse_cfg,
             const BikebotParams& p, const ActuatorLimits& lim,
             const ControllerGains& gains, const EicConfig& eic_cfg,
             const LegGeometry& geom, const RoaGrid* roa, bool impulse_enabled);

  // Called once per controller tick, after any impact has been resolved at
  // the physics level. accel_x is the measured longitudinal acceleration and
  // geometric_hit reports a face crossing this tick (used only in geometric
  // detection mode).
  SupervisorDecision supervise(const BikebotState& s, const EicController& ctrl,
                               const ReferenceTrajectory& ref, double accel_x,
                               bool geometric_hit);

  FsmMode mode() const { return mode_; }
  void fail(const std::string& why);

  // Grid membership with the validity gate: the grid certifies recovery only
  // near the speed it was computed at, so far-off speeds report non-member
  // (same conservative policy as out-of-bounds lookups).
  bool trusted_roa(const BikebotState& s) const;

 private:
  SupervisorConfig cfg_;
  ImpulseConfig impulse_cfg_;
  BikebotParams p_;
  ActuatorLimits lim_;
  ControllerGains gains_;
  EicConfig eic_cfg_;
  LegGeometry geom_;
  const RoaGrid* roa_;
  bool impulse_enabled_;

  FsmMode mode_ = FsmMode::Tracking;
  double last_detect_t_ = -1e18;
  bool pending_detect_ = false;
  double impulse_end_t_ = 0.0;
  double recovery_start_t_ = 0.0;
  std::string fail_note_;

  bool transition(FsmMode to);
};

}  // namespace bikecross
