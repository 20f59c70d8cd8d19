#pragma once

#include <string>
#include <vector>

#include "bikecross/impact.hpp"
#include "bikecross/residual.hpp"
#include "bikecross/scenario.hpp"
#include "bikecross/supervisor.hpp"

namespace bikecross {

enum class Verdict { Balanced, BalanceLost };

const char* to_string(Verdict v);

// One logged controller-tick sample (the state.csv row layout).
struct TrajectorySample {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  double psi = 0.0;
  double varphi_b = 0.0;
  double phi = 0.0;
  double v = 0.0;
  double dot_varphi_b = 0.0;
  FsmMode mode = FsmMode::Tracking;
};

// Timestamped annotation (the events.csv row layout).
struct SimEvent {
  double t = 0.0;
  std::string kind;    // impact, impulse_fired, impulse_end, mode_change, failed
  std::string detail;  // semicolon-joined key=value pairs
};

// Everything recorded about one wheel-step collision.
struct ImpactRecord {
  double t = 0.0;
  double h_o = 0.0;
  double v_minus = 0.0;
  double v_plus = 0.0;
  Vector5d qdot_minus = Vector5d::Zero();
  Vector5d qdot_plus = Vector5d::Zero();
  double cond = 0.0;
  Eigen::Vector3d e_used{0, 0, 0};
  bool estimate_valid = false;          // residual model ran on this impact
  Vector5d qdot_est_nominal = Vector5d::Zero();
  Vector5d qdot_est_enhanced = Vector5d::Zero();
};

// Everything recorded about one leg impulse, including the post-window
// state captured at the first plant step after the torque ends.
struct ImpulseRecord {
  double t_fire = 0.0;
  double t_end = 0.0;
  double delta_tau_x = 0.0;
  LegSide side = LegSide::Left;
  double f_z = 0.0;
  double pre_phi_b = 0.0, pre_rate = 0.0;
  double post_phi_b = 0.0, post_rate = 0.0;
  bool pre_in_roa = false, post_in_roa = false;
  double min_bound = 0.0;     // smallest admissible |delta_tau_x|
  bool necessary = false;     // direction test on the commanded torque
  double v_plus = 0.0;        // re-initialized forward speed
  double predicted_roll = 0.0;
};

struct RunResult {
  Verdict verdict = Verdict::Balanced;
  FsmMode final_mode = FsmMode::Tracking;
  BikebotState final_state;
  double max_abs_varphi_b = 0.0;
  double cross_track_rms = 0.0;
  std::string fail_reason;
  std::vector<TrajectorySample> trajectory;
  std::vector<SimEvent> events;
  std::vector<ImpactRecord> impacts;
  std::vector<ImpulseRecord> impulses;
};

// Fixed-step closed-loop run: 1 kHz plant, controller and supervisor at the
// configured control period, impacts resolved at the physics level when the
// front wheel crosses a step face. Never throws on dynamics divergence; the
// verdict reports it instead.
RunResult run_scenario(const Scenario& sc);

// Serialized outputs (byte-stable across runs of the same scenario).
std::string state_csv(const RunResult& r);
std::string events_csv(const RunResult& r);
std::string metrics_json(const RunResult& r, const Scenario& sc);

// Writes state.csv, events.csv and metrics.json into a directory that must
// already exist.
void write_outputs(const RunResult& r, const Scenario& sc,
                   const std::string& dir);

}  // namespace bikecross
