#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bikecross/eic.hpp"
#include "bikecross/impact.hpp"
#include "bikecross/impulse.hpp"
#include "bikecross/params.hpp"
#include "bikecross/reference.hpp"
#include "bikecross/state.hpp"
#include "bikecross/supervisor.hpp"

namespace bikecross {

// Which signals feed impact detection.
enum class DetectionSource { Both, Accel, Geometric };

// How restitution coefficients are chosen at impact time.
enum class RestitutionMode { Fixed, Geometric };

// Residual-model and synthetic-training configuration. Everything has a
// default so scenarios can omit the whole section.
struct ResidualConfig {
  std::string model;        // serialized model path ("" = disabled)
  int window = 10;          // observation ticks per example
  int hidden = 32;          // recurrent state width
  int num_examples = 10000; // synthetic dataset size
  int epochs = 40;
  int batch = 64;
  double lr = 3e-3;
  double val_frac = 0.1;
  double early_stop_ratio = 0.45;  // stop once val RMSE <= ratio * nominal
  double hop_gain = 0.3;           // unmodeled mount-hop strength
  double param_jitter = 0.10;      // relative mass/height mismatch range
  double e_jitter = 0.15;          // absolute restitution mismatch range
  double sigma_a = 0.2;            // accel noise (m/s^2)
  double sigma_omega = 0.01;       // gyro noise (rad/s)
  double sigma_v = 0.01;           // odometry noise (m/s)
  void validate() const;
};

// One step-like obstacle across the path, placed by arc length.
struct ScenarioObstacle {
  double s_o = 0.0;    // arc length of the step along the reference (m)
  double h_o = 0.04;   // step height (m)
  double width = 0.3;  // lateral extent about the path (m)
};

// A full, validated run description: plant, controller, impact model,
// impulse machinery, obstacles, reference path and initial conditions.
struct Scenario {
  // [run]
  double duration = 10.0;
  std::uint64_t seed = 1;
  bool impulse_enabled = true;
  bool residual_enabled = false;
  DetectionSource detection = DetectionSource::Both;

  // [reference]
  ReferenceTrajectory reference =
      ReferenceTrajectory::line({0, 0}, 0.0, 1.0);

  // [initial] (v defaults to the reference nominal speed when omitted)
  BikebotState initial;

  BikebotParams params;        // [params]
  ActuatorLimits limits;       // [limits]
  ControllerGains gains;       // [gains]
  EicConfig eic;               // [eic]
  RestitutionModel restitution;       // [impact]
  RestitutionMode e_mode = RestitutionMode::Fixed;
  double e_exponent = 4.0;            // geometric-mode falloff power
  ImpulseConfig impulse;       // [impulse]
  SupervisorConfig supervisor; // [supervisor]
  RoaGridSpec roa;             // [roa] (v_nominal follows reference speed)
  ResidualConfig residual;     // [residual]
  LegGeometry leg;             // [leg]
  std::vector<ScenarioObstacle> obstacles;  // repeated [obstacle]

  // Parse a scenario file. Unknown sections or keys, malformed values,
  // duplicate keys and failed validation all raise ParseError or
  // ValidationError with the offending line.
  static Scenario load(const std::string& path);
  static Scenario parse(const std::string& text, const std::string& origin);

  // Overrides a scalar by dotted name (used by sweeps), e.g. "initial.v",
  // "obstacle.h_o", "impact.e_x", "impulse.r_iy", "run.seed".
  void set_param(const std::string& name, double value);

  void validate() const;
};

}  // namespace bikecross
