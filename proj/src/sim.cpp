#include "bikecross/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "bikecross/csv.hpp"
#include "bikecross/dynamics.hpp"
#include "bikecross/errors.hpp"

namespace bikecross {

const char* to_string(Verdict v) {
  return v == Verdict::Balanced ? "Balanced" : "BalanceLost";
}

namespace {

std::string kv(const std::string& key, double value) {
  return key + "=" + format_double(value);
}

}  // namespace

RunResult run_scenario(const Scenario& sc) {
  sc.validate();
  RunResult out;
  const BikebotParams& p = sc.params;
  const ActuatorLimits& lim = sc.limits;
  const ReferenceTrajectory& ref = sc.reference;
  const double dt = 1e-3;
  const int ctrl_every =
      std::max(1, static_cast<int>(std::round(sc.eic.dt_ctrl / dt)));
  const long n_steps = std::lround(sc.duration / dt);

  EicController ctrl(p, lim, sc.gains, sc.eic);

  RoaGrid grid;
  const RoaGrid* gp = nullptr;
  if (sc.impulse_enabled) {
    grid = estimate_roa(p, lim, sc.gains, sc.eic, sc.roa);
    gp = &grid;
  }
  Supervisor sup(sc.supervisor, sc.impulse, p, lim, sc.gains, sc.eic, sc.leg,
                 gp, sc.impulse_enabled);

  GruResidualModel model;
  bool have_model = false;
  if (sc.residual_enabled && !sc.residual.model.empty()) {
    model = GruResidualModel::load(sc.residual.model);
    have_model = true;
  }
  WindowBuffer wbuf(have_model ? model.window() : sc.residual.window);

  BikebotState s = sc.initial;
  s.t = 0.0;
  ActuatorCommand cmd{0.0, s.phi};
  RollTorquePort port{};

  double prev_tick_v = s.v;
  bool geo_latch = false;
  std::size_t next_ob = 0;
  double prev_sf = ref.arclength_of(
      {s.x + p.l * std::cos(s.psi), s.y + p.l * std::sin(s.psi)});
  FsmMode prev_mode = FsmMode::Tracking;

  bool impulse_open = false;
  double impulse_t_end = 0.0;
  double impulse_v_plus = 0.0;

  double cross_acc = 0.0;
  long cross_n = 0;
  out.max_abs_varphi_b = std::abs(s.varphi_b);

  auto sample = [&](FsmMode m) {
    out.trajectory.push_back({s.t, s.x, s.y, s.psi, s.varphi_b, s.phi, s.v,
                              s.dot_varphi_b, m});
  };
  auto event = [&](const std::string& kind, const std::string& detail) {
    out.events.push_back({s.t, kind, detail});
  };
  auto declare_lost = [&](const std::string& why) {
    out.verdict = Verdict::BalanceLost;
    if (out.fail_reason.empty()) out.fail_reason = why;
    sup.fail(why);
    event("failed", "reason=" + why);
  };

  // Observation row at a controller tick; post-impact rows carry the spike.
  auto push_row = [&](double a_x, double a_y, double a_z, double gx, double gz,
                      double v_meas) {
    wbuf.push(make_features({a_x, a_y, a_z}, {gx, 0.0, gz}, v_meas,
                            s.varphi_b, s.phi, s.psi));
  };

  auto apply_impact = [&](const ScenarioObstacle& ob) {
    Vector5d q;
    q << s.x, s.y, 0.0, s.psi, s.varphi_b;
    const double psi_dot = yaw_rate(s, p);
    Vector5d qm;
    qm << s.v * std::cos(s.psi), s.v * std::sin(s.psi), 0.0, psi_dot,
        s.dot_varphi_b;
    RestitutionModel e = sc.restitution;
    if (sc.e_mode == RestitutionMode::Geometric)
      e.e_x = std::pow((p.R_w - ob.h_o) / p.R_w, sc.e_exponent);
    const ImpactSolution sol = post_impact(q, qm, ob.h_o, e, p, s.phi);
    const PlanarVelocities pl = project_to_planar(sol.qdot_plus, s.psi);

    ImpactRecord rec;
    rec.t = s.t;
    rec.h_o = ob.h_o;
    rec.v_minus = s.v;
    rec.v_plus = std::max(pl.v, 0.0);
    rec.qdot_minus = qm;
    rec.qdot_plus = sol.qdot_plus;
    rec.cond = sol.cond;
    rec.e_used = e.vec();

    if (have_model) {
      push_row((pl.v - prev_tick_v) / sc.eic.dt_ctrl, pl.v * pl.psi_dot,
               -kGravity * std::cos(s.varphi_b) +
                   sol.qdot_plus(2) / sc.eic.dt_ctrl,
               pl.dot_varphi_b, pl.psi_dot, pl.v);
      if (wbuf.full()) {
        const ImpactSolution nom =
            post_impact(q, qm, ob.h_o, sc.restitution, p, s.phi);
        rec.qdot_est_nominal = nom.qdot_plus;
        rec.qdot_est_enhanced = model.enhance(nom.qdot_plus, wbuf);
        rec.estimate_valid = true;
      }
    }

    s.v = std::max(pl.v, 0.0);
    s.dot_varphi_b = pl.dot_varphi_b;
    s.phi = steering_from_yawrate(pl.psi_dot, std::max(s.v, lim.v_min),
                                  s.varphi_b, p, lim);
    out.impacts.push_back(rec);
    event("impact", kv("h_o", ob.h_o) + ";" + kv("v_minus", rec.v_minus) +
                        ";" + kv("v_plus", rec.v_plus) + ";" +
                        kv("dot_varphi_b_plus", pl.dot_varphi_b) + ";" +
                        kv("cond", sol.cond));
  };

  for (long k = 0; k < n_steps; ++k) {
    if (k % ctrl_every == 0) {
      const double a_x = (s.v - prev_tick_v) / sc.eic.dt_ctrl;
      prev_tick_v = s.v;
      double a_x_fed = a_x;
      bool geo_fed = geo_latch;
      geo_latch = false;
      if (sc.detection == DetectionSource::Accel) geo_fed = false;
      if (sc.detection == DetectionSource::Geometric) a_x_fed = 0.0;

      cmd = ctrl.tick(s, ref);

      if (have_model) {
        double psi_dot = 0.0;
        try {
          psi_dot = yaw_rate(s, p);
        } catch (const Error&) {
          psi_dot = 0.0;
        }
        push_row(a_x, s.v * psi_dot, -kGravity * std::cos(s.varphi_b),
                 s.dot_varphi_b, psi_dot, s.v);
      }

      const SupervisorDecision dec = sup.supervise(s, ctrl, ref, a_x_fed, geo_fed);
      if (dec.mode != prev_mode) {
        event("mode_change", std::string("from=") + to_string(prev_mode) +
                                 ";to=" + to_string(dec.mode));
        prev_mode = dec.mode;
      }
      if (dec.mode == FsmMode::Failed) {
        declare_lost(dec.note.empty() ? "supervisor failed" : dec.note);
        sample(FsmMode::Failed);
        break;
      }
      if (dec.fired) {
        // Half-step guard: the zero-order-hold port must be active for
        // exactly kappa/dt plant steps regardless of time accumulation.
        port = RollTorquePort{dec.command.delta_tau_x,
                              dec.command.t_tau_plus - 0.5 * dt};
        impulse_open = true;
        impulse_t_end = dec.command.t_tau_plus;
        impulse_v_plus = dec.reinit.v_plus;
        ImpulseRecord ir;
        ir.t_fire = s.t;
        ir.t_end = dec.command.t_tau_plus;
        ir.delta_tau_x = dec.command.delta_tau_x;
        ir.side = dec.command.side;
        ir.f_z = dec.command.f_z;
        ir.pre_phi_b = dec.pre_phi_b;
        ir.pre_rate = dec.pre_rate;
        ir.pre_in_roa = sup.trusted_roa(s);
        ir.min_bound = dec.min_impulse_bound;
        ir.necessary = dec.necessary_condition;
        ir.v_plus = dec.reinit.v_plus;
        ir.predicted_roll = dec.predicted_roll;
        out.impulses.push_back(ir);
        event("impulse_fired",
              kv("delta_tau_x", ir.delta_tau_x) + ";side=" +
                  (ir.side == LegSide::Left ? "left" : "right") + ";" +
                  kv("f_z", ir.f_z) + ";" + kv("v_plus", ir.v_plus) + ";" +
                  kv("predicted_roll", dec.predicted_roll));
      }
      sample(dec.mode);

      const RefPoint rp = ref.eval(s.t);
      cross_acc += (Eigen::Vector2d(s.x, s.y) - rp.r).squaredNorm();
      ++cross_n;
    }

    try {
      s = step(s, cmd, port, dt, p, lim);

      if (impulse_open && s.t >= impulse_t_end - 0.5 * dt) {
        s.v = std::clamp(impulse_v_plus, 0.0, lim.v_max);
        ImpulseRecord& ir = out.impulses.back();
        ir.post_phi_b = s.varphi_b;
        ir.post_rate = s.dot_varphi_b;
        ir.post_in_roa = sup.trusted_roa(s);
        event("impulse_end", kv("post_phi_b", ir.post_phi_b) + ";" +
                                 kv("post_rate", ir.post_rate) + ";" +
                                 kv("v", s.v));
        impulse_open = false;
      }

      const Eigen::Vector2d front(s.x + p.l * std::cos(s.psi),
                                  s.y + p.l * std::sin(s.psi));
      const double sf = ref.arclength_of(front);
      if (next_ob < sc.obstacles.size()) {
        const ScenarioObstacle& ob = sc.obstacles[next_ob];
        if (prev_sf < ob.s_o && sf >= ob.s_o) {
          const double dev = (front - ref.point_at_arclength(ob.s_o)).norm();
          if (dev <= 0.5 * ob.width) {
            apply_impact(ob);
            geo_latch = true;
          }
          ++next_ob;
        }
      }
      prev_sf = sf;
    } catch (const Error& e) {
      declare_lost(e.what());
      sample(FsmMode::Failed);
      break;
    }

    out.max_abs_varphi_b = std::max(out.max_abs_varphi_b, std::abs(s.varphi_b));
    if (std::abs(s.varphi_b) > deg2rad(60.0)) {
      declare_lost("roll exceeded 60 deg");
      sample(FsmMode::Failed);
      break;
    }
  }

  if (out.verdict == Verdict::Balanced) {
    if (sup.mode() == FsmMode::Failed) {
      out.verdict = Verdict::BalanceLost;
      if (out.fail_reason.empty()) out.fail_reason = "supervisor failed";
    } else {
      sample(sup.mode());
    }
  }
  out.final_mode = sup.mode();
  out.final_state = s;
  out.cross_track_rms =
      cross_n > 0 ? std::sqrt(cross_acc / static_cast<double>(cross_n)) : 0.0;
  return out;
}

std::string state_csv(const RunResult& r) {
  CsvBuilder b({"t", "x", "y", "psi", "varphi_b", "phi", "v", "dot_varphi_b",
                "mode"});
  for (const TrajectorySample& ts : r.trajectory) {
    b.row({format_double(ts.t), format_double(ts.x), format_double(ts.y),
           format_double(ts.psi), format_double(ts.varphi_b),
           format_double(ts.phi), format_double(ts.v),
           format_double(ts.dot_varphi_b), to_string(ts.mode)});
  }
  return b.str();
}

std::string events_csv(const RunResult& r) {
  CsvBuilder b({"t", "kind", "detail"});
  for (const SimEvent& e : r.events)
    b.row({format_double(e.t), e.kind, e.detail});
  return b.str();
}

std::string metrics_json(const RunResult& r, const Scenario& sc) {
  nlohmann::json j;
  j["verdict"] = to_string(r.verdict);
  j["final_mode"] = to_string(r.final_mode);
  j["fail_reason"] = r.fail_reason;
  j["duration"] = sc.duration;
  j["seed"] = sc.seed;
  j["impulse_enabled"] = sc.impulse_enabled;
  j["residual_enabled"] = sc.residual_enabled;
  j["max_abs_varphi_b_deg"] = rad2deg(r.max_abs_varphi_b);
  j["cross_track_rms"] = r.cross_track_rms;
  j["final"] = {{"t", r.final_state.t},
                {"x", r.final_state.x},
                {"y", r.final_state.y},
                {"psi_deg", rad2deg(r.final_state.psi)},
                {"varphi_b_deg", rad2deg(r.final_state.varphi_b)},
                {"v", r.final_state.v}};
  nlohmann::json impacts = nlohmann::json::array();
  for (const ImpactRecord& ir : r.impacts) {
    nlohmann::json e;
    e["t"] = ir.t;
    e["h_o"] = ir.h_o;
    e["v_minus"] = ir.v_minus;
    e["v_plus"] = ir.v_plus;
    e["cond"] = ir.cond;
    e["dot_varphi_b_plus"] = ir.qdot_plus(4);
    e["psi_dot_plus"] = ir.qdot_plus(3);
    e["e_x"] = ir.e_used(0);
    if (ir.estimate_valid) {
      e["est_nominal_err"] = (ir.qdot_plus - ir.qdot_est_nominal).norm();
      e["est_enhanced_err"] = (ir.qdot_plus - ir.qdot_est_enhanced).norm();
    }
    impacts.push_back(e);
  }
  j["impacts"] = impacts;
  nlohmann::json impulses = nlohmann::json::array();
  for (const ImpulseRecord& ir : r.impulses) {
    nlohmann::json e;
    e["t_fire"] = ir.t_fire;
    e["t_end"] = ir.t_end;
    e["delta_tau_x"] = ir.delta_tau_x;
    e["side"] = ir.side == LegSide::Left ? "left" : "right";
    e["f_z"] = ir.f_z;
    e["pre_phi_b_deg"] = rad2deg(ir.pre_phi_b);
    e["pre_rate_deg_s"] = rad2deg(ir.pre_rate);
    e["post_phi_b_deg"] = rad2deg(ir.post_phi_b);
    e["post_rate_deg_s"] = rad2deg(ir.post_rate);
    e["pre_in_roa"] = ir.pre_in_roa;
    e["post_in_roa"] = ir.post_in_roa;
    e["min_bound"] = ir.min_bound;
    e["necessary"] = ir.necessary;
    e["v_plus"] = ir.v_plus;
    e["predicted_roll_deg"] = rad2deg(ir.predicted_roll);
    impulses.push_back(e);
  }
  j["impulses"] = impulses;
  return j.dump(2) + "\n";
}

void write_outputs(const RunResult& r, const Scenario& sc,
                   const std::string& dir) {
  write_text_file(dir + "/state.csv", state_csv(r));
  write_text_file(dir + "/events.csv", events_csv(r));
  write_text_file(dir + "/metrics.json", metrics_json(r, sc));
}

}  // namespace bikecross
