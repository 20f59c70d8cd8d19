#include "bikecross/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "bikecross/errors.hpp"

namespace bikecross {

void ResidualConfig::validate() const {
  if (window < 2) throw ValidationError("ResidualConfig: window must be >= 2");
  if (hidden < 1 || hidden > 512)
    throw ValidationError("ResidualConfig: hidden must lie in [1, 512]");
  if (num_examples < 10)
    throw ValidationError("ResidualConfig: need at least 10 examples");
  if (epochs < 0)
    throw ValidationError("ResidualConfig: epochs must be non-negative");
  if (batch < 1 || lr <= 0)
    throw ValidationError("ResidualConfig: batch and lr must be positive");
  if (val_frac <= 0 || val_frac > 0.5)
    throw ValidationError("ResidualConfig: val_frac must lie in (0, 0.5]");
  if (early_stop_ratio <= 0)
    throw ValidationError("ResidualConfig: early_stop_ratio must be positive");
  if (hop_gain < 0 || sigma_a < 0 || sigma_omega < 0 || sigma_v < 0)
    throw ValidationError("ResidualConfig: noise levels must be non-negative");
  if (param_jitter < 0 || e_jitter < 0)
    throw ValidationError("ResidualConfig: mismatch ranges must be non-negative");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct KeyVal {
  std::string key;
  std::string value;
  int line = 0;
  bool used = false;
};

struct RawSection {
  std::string name;
  int line = 0;
  std::vector<KeyVal> kvs;
};

[[noreturn]] void fail_at(const std::string& origin, int line,
                          const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw ParseError(os.str());
}

double to_double(const std::string& origin, const KeyVal& kv) {
  const std::string v = trim(kv.value);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    fail_at(origin, kv.line, "expected a number for '" + kv.key + "', got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& origin, const KeyVal& kv) {
  const std::string v = trim(kv.value);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    fail_at(origin, kv.line,
            "expected a non-negative integer for '" + kv.key + "', got '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

int to_int(const std::string& origin, const KeyVal& kv) {
  const std::string v = trim(kv.value);
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    fail_at(origin, kv.line, "expected an integer for '" + kv.key + "', got '" + v + "'");
  return static_cast<int>(x);
}

bool to_bool(const std::string& origin, const KeyVal& kv) {
  std::string v = trim(kv.value);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail_at(origin, kv.line,
          "expected true/false/on/off for '" + kv.key + "', got '" + kv.value + "'");
}

std::vector<double> to_list(const std::string& origin, const KeyVal& kv) {
  std::vector<double> out;
  std::stringstream ss(kv.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size())
      fail_at(origin, kv.line,
              "expected a comma-separated number list for '" + kv.key + "'");
    out.push_back(x);
  }
  if (out.empty())
    fail_at(origin, kv.line, "empty list for '" + kv.key + "'");
  return out;
}

// Typed accessor over one section; every key must be consumed exactly once.
class Fields {
 public:
  Fields(RawSection& sec, const std::string& origin)
      : sec_(sec), origin_(origin) {}

  bool has(const std::string& key) {
    for (auto& kv : sec_.kvs)
      if (kv.key == key) return true;
    return false;
  }

  double num(const std::string& key, double dflt) {
    KeyVal* kv = take(key);
    return kv ? to_double(origin_, *kv) : dflt;
  }
  double req_num(const std::string& key) {
    KeyVal* kv = take(key);
    if (!kv) fail_at(origin_, sec_.line, "missing required key '" + key +
                                             "' in [" + sec_.name + "]");
    return to_double(origin_, *kv);
  }
  double deg(const std::string& key, double dflt_rad) {
    KeyVal* kv = take(key);
    return kv ? deg2rad(to_double(origin_, *kv)) : dflt_rad;
  }
  int integer(const std::string& key, int dflt) {
    KeyVal* kv = take(key);
    return kv ? to_int(origin_, *kv) : dflt;
  }
  std::uint64_t u64(const std::string& key, std::uint64_t dflt) {
    KeyVal* kv = take(key);
    return kv ? to_u64(origin_, *kv) : dflt;
  }
  bool boolean(const std::string& key, bool dflt) {
    KeyVal* kv = take(key);
    return kv ? to_bool(origin_, *kv) : dflt;
  }
  std::string text(const std::string& key, const std::string& dflt) {
    KeyVal* kv = take(key);
    return kv ? trim(kv->value) : dflt;
  }
  std::vector<double> list(const std::string& key) {
    KeyVal* kv = take(key);
    if (!kv) fail_at(origin_, sec_.line, "missing required key '" + key +
                                             "' in [" + sec_.name + "]");
    return to_list(origin_, *kv);
  }
  bool maybe_list(const std::string& key, std::vector<double>& out) {
    KeyVal* kv = take(key);
    if (!kv) return false;
    out = to_list(origin_, *kv);
    return true;
  }

  // Rejects any key that no handler consumed.
  void finish() {
    for (const auto& kv : sec_.kvs)
      if (!kv.used)
        fail_at(origin_, kv.line,
                "unknown key '" + kv.key + "' in [" + sec_.name + "]");
  }

 private:
  KeyVal* take(const std::string& key) {
    for (auto& kv : sec_.kvs) {
      if (kv.key == key) {
        if (kv.used)
          fail_at(origin_, kv.line, "internal: key consumed twice");
        kv.used = true;
        return &kv;
      }
    }
    return nullptr;
  }

  RawSection& sec_;
  const std::string& origin_;
};

std::vector<RawSection> tokenize(const std::string& text,
                                 const std::string& origin) {
  std::vector<RawSection> sections;
  sections.push_back({"", 0, {}});  // global scope for 'schema'
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail_at(origin, line_no, "malformed section header '" + line + "'");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail_at(origin, line_no, "empty section name");
      sections.push_back({name, line_no, {}});
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(origin, line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_at(origin, line_no, "empty key");
    for (const auto& kv : sections.back().kvs)
      if (kv.key == key)
        fail_at(origin, line_no, "duplicate key '" + key + "' in [" +
                                     sections.back().name + "]");
    sections.back().kvs.push_back({key, value, line_no, false});
  }
  return sections;
}

ReferenceTrajectory parse_reference(RawSection& sec,
                                    const std::string& origin) {
  Fields f(sec, origin);
  const std::string type = f.text("type", "line");
  ReferenceTrajectory ref = ReferenceTrajectory::line({0, 0}, 0.0, 1.0);
  if (type == "line") {
    const double x0 = f.num("x0", 0.0);
    const double y0 = f.num("y0", 0.0);
    const double heading = f.deg("heading_deg", 0.0);
    const double speed = f.num("speed", 1.0);
    ref = ReferenceTrajectory::line({x0, y0}, heading, speed);
  } else if (type == "arc") {
    const double cx = f.req_num("cx");
    const double cy = f.req_num("cy");
    const double radius = f.req_num("radius");
    const double theta0 = f.deg("theta0_deg", 0.0);
    const double speed = f.num("speed", 1.0);
    const bool ccw = f.boolean("ccw", true);
    ref = ReferenceTrajectory::arc({cx, cy}, radius, theta0, speed, ccw);
  } else if (type == "spline") {
    const std::vector<double> times = f.list("times");
    const std::vector<double> xs = f.list("xs");
    const std::vector<double> ys = f.list("ys");
    if (xs.size() != times.size() || ys.size() != times.size())
      fail_at(origin, sec.line, "[reference] times/xs/ys must match in length");
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], ys[i]});
    ref = ReferenceTrajectory::spline(times, pts);
  } else {
    fail_at(origin, sec.line,
            "[reference] type must be line, arc or spline, got '" + type + "'");
  }
  f.finish();
  return ref;
}

}  // namespace

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

Scenario Scenario::parse(const std::string& text, const std::string& origin) {
  std::vector<RawSection> raw = tokenize(text, origin);

  // Global scope: the schema tag is mandatory and must match.
  {
    Fields g(raw[0], origin);
    const int schema = g.integer("schema", -1);
    if (schema != 1)
      fail_at(origin, 1, "scenario must declare 'schema = 1' before any section");
    g.finish();
  }

  // Index non-repeatable sections; reject duplicates and unknown names.
  static const char* kKnown[] = {"run",     "reference", "initial", "params",
                                 "limits",  "gains",     "eic",     "impact",
                                 "impulse", "supervisor", "roa",    "residual",
                                 "leg",     "obstacle"};
  std::map<std::string, RawSection*> by_name;
  std::vector<RawSection*> obstacles;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    RawSection& sec = raw[i];
    const bool known = std::any_of(std::begin(kKnown), std::end(kKnown),
                                   [&](const char* k) { return sec.name == k; });
    if (!known)
      fail_at(origin, sec.line, "unknown section [" + sec.name + "]");
    if (sec.name == "obstacle") {
      obstacles.push_back(&sec);
      continue;
    }
    if (by_name.count(sec.name))
      fail_at(origin, sec.line, "duplicate section [" + sec.name + "]");
    by_name[sec.name] = &sec;
  }

  Scenario sc;

  // Reference first: initial speed and the ROA nominal speed default to it.
  if (auto it = by_name.find("reference"); it != by_name.end())
    sc.reference = parse_reference(*it->second, origin);

  if (auto it = by_name.find("run"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.duration = f.num("duration", sc.duration);
    sc.seed = f.u64("seed", sc.seed);
    sc.impulse_enabled = f.boolean("impulse", sc.impulse_enabled);
    sc.residual_enabled = f.boolean("residual", sc.residual_enabled);
    const std::string det = f.text("detection", "both");
    if (det == "both") sc.detection = DetectionSource::Both;
    else if (det == "accel") sc.detection = DetectionSource::Accel;
    else if (det == "geometric") sc.detection = DetectionSource::Geometric;
    else fail_at(origin, it->second->line,
                 "[run] detection must be both, accel or geometric");
    f.finish();
  }

  bool initial_v_set = false;
  if (auto it = by_name.find("initial"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.initial.x = f.num("x", 0.0);
    sc.initial.y = f.num("y", 0.0);
    sc.initial.psi = f.deg("psi_deg", 0.0);
    sc.initial.varphi_b = f.deg("varphi_b_deg", 0.0);
    sc.initial.dot_varphi_b = f.deg("dot_varphi_b_deg_s", 0.0);
    initial_v_set = f.has("v");
    sc.initial.v = f.num("v", 0.0);
    sc.initial.dot_v = f.num("dot_v", 0.0);
    sc.initial.phi = f.deg("phi_deg", 0.0);
    f.finish();
  }
  if (!initial_v_set) sc.initial.v = sc.reference.nominal_speed();

  if (auto it = by_name.find("params"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.params.m_b = f.num("m_b", sc.params.m_b);
    sc.params.J_b = f.num("J_b", sc.params.J_b);
    sc.params.J_z = f.num("J_z", sc.params.J_z);
    sc.params.l = f.num("l", sc.params.l);
    sc.params.R_w = f.num("R_w", sc.params.R_w);
    sc.params.l_G = f.num("l_G", sc.params.l_G);
    sc.params.h_G = f.num("h_G", sc.params.h_G);
    sc.params.epsilon = f.deg("epsilon_deg", sc.params.epsilon);
    f.finish();
  }

  if (auto it = by_name.find("limits"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.limits.phi_max = f.deg("phi_max_deg", sc.limits.phi_max);
    sc.limits.v_max = f.num("v_max", sc.limits.v_max);
    sc.limits.v_min = f.num("v_min", sc.limits.v_min);
    sc.limits.dot_v_max = f.num("dot_v_max", sc.limits.dot_v_max);
    sc.limits.u_v_max = f.num("u_v_max", sc.limits.u_v_max);
    sc.limits.steer_lag = f.num("steer_lag", sc.limits.steer_lag);
    sc.limits.steer_rate_max =
        f.deg("steer_rate_max_deg_s", sc.limits.steer_rate_max);
    f.finish();
  }

  if (auto it = by_name.find("gains"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.gains.a0 = f.num("a0", sc.gains.a0);
    sc.gains.a1 = f.num("a1", sc.gains.a1);
    sc.gains.a2 = f.num("a2", sc.gains.a2);
    sc.gains.b0 = f.num("b0", sc.gains.b0);
    sc.gains.b1 = f.num("b1", sc.gains.b1);
    f.finish();
  }

  if (auto it = by_name.find("eic"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.eic.dt_ctrl = f.num("dt_ctrl", sc.eic.dt_ctrl);
    sc.eic.manifold_filter_hz =
        f.num("manifold_filter_hz", sc.eic.manifold_filter_hz);
    sc.eic.yaw_cmd_horizon = f.num("yaw_cmd_horizon", sc.eic.yaw_cmd_horizon);
    sc.eic.u_psi_max = f.num("u_psi_max", sc.eic.u_psi_max);
    sc.eic.manifold_bracket =
        f.deg("manifold_bracket_deg", sc.eic.manifold_bracket);
    f.finish();
  }

  if (auto it = by_name.find("impact"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.restitution.e_x = f.num("e_x", sc.restitution.e_x);
    sc.restitution.e_y = f.num("e_y", sc.restitution.e_y);
    sc.restitution.e_z = f.num("e_z", sc.restitution.e_z);
    const std::string mode = f.text("e_mode", "fixed");
    if (mode == "fixed") sc.e_mode = RestitutionMode::Fixed;
    else if (mode == "geometric") sc.e_mode = RestitutionMode::Geometric;
    else fail_at(origin, it->second->line,
                 "[impact] e_mode must be fixed or geometric");
    sc.e_exponent = f.num("e_exponent", sc.e_exponent);
    f.finish();
  }

  if (auto it = by_name.find("impulse"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.impulse.kappa = f.num("kappa", sc.impulse.kappa);
    sc.impulse.horizon = f.num("horizon", sc.impulse.horizon);
    sc.impulse.delta_tau_x_max =
        f.num("delta_tau_x_max", sc.impulse.delta_tau_x_max);
    sc.impulse.f_z_max = f.num("f_z_max", sc.impulse.f_z_max);
    sc.impulse.v_max = f.num("v_max", sc.impulse.v_max);
    sc.impulse.v_min = f.num("v_min", sc.impulse.v_min);
    sc.impulse.phi_max = f.deg("phi_max_deg", sc.impulse.phi_max);
    sc.impulse.r_iy = f.num("r_iy", sc.impulse.r_iy);
    std::vector<double> diag;
    if (f.maybe_list("p_diag", diag)) {
      if (diag.size() != 6)
        fail_at(origin, it->second->line, "[impulse] p_diag needs 6 values");
      for (int i = 0; i < 6; ++i) sc.impulse.p_diag[i] = diag[i];
    }
    if (f.maybe_list("q_diag", diag)) {
      if (diag.size() != 2)
        fail_at(origin, it->second->line, "[impulse] q_diag needs 2 values");
      for (int i = 0; i < 2; ++i) sc.impulse.q_diag[i] = diag[i];
    }
    f.finish();
  }

  if (auto it = by_name.find("supervisor"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.supervisor.a_x_max = f.num("a_x_max", sc.supervisor.a_x_max);
    sc.supervisor.varphi_b_max =
        f.deg("varphi_b_max_deg", sc.supervisor.varphi_b_max);
    sc.supervisor.delta_t = f.num("delta_t", sc.supervisor.delta_t);
    sc.supervisor.debounce = f.num("debounce", sc.supervisor.debounce);
    sc.supervisor.recovery_timeout =
        f.num("recovery_timeout", sc.supervisor.recovery_timeout);
    sc.supervisor.roa_v_tol = f.num("roa_v_tol", sc.supervisor.roa_v_tol);
    f.finish();
  }

  sc.roa.v_nominal = sc.reference.nominal_speed();
  if (auto it = by_name.find("roa"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.roa.phi_b_max = f.deg("phi_b_max_deg", sc.roa.phi_b_max);
    sc.roa.rate_max = f.deg("rate_max_deg_s", sc.roa.rate_max);
    sc.roa.n_phi = f.integer("n_phi", sc.roa.n_phi);
    sc.roa.n_rate = f.integer("n_rate", sc.roa.n_rate);
    sc.roa.sim_time = f.num("sim_time", sc.roa.sim_time);
    sc.roa.v_nominal = f.num("v_nominal", sc.roa.v_nominal);
    f.finish();
  }

  if (auto it = by_name.find("residual"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.residual.model = f.text("model", sc.residual.model);
    sc.residual.window = f.integer("window", sc.residual.window);
    sc.residual.hidden = f.integer("hidden", sc.residual.hidden);
    sc.residual.num_examples =
        f.integer("num_examples", sc.residual.num_examples);
    sc.residual.epochs = f.integer("epochs", sc.residual.epochs);
    sc.residual.batch = f.integer("batch", sc.residual.batch);
    sc.residual.lr = f.num("lr", sc.residual.lr);
    sc.residual.val_frac = f.num("val_frac", sc.residual.val_frac);
    sc.residual.early_stop_ratio =
        f.num("early_stop_ratio", sc.residual.early_stop_ratio);
    sc.residual.hop_gain = f.num("hop_gain", sc.residual.hop_gain);
    sc.residual.param_jitter = f.num("param_jitter", sc.residual.param_jitter);
    sc.residual.e_jitter = f.num("e_jitter", sc.residual.e_jitter);
    sc.residual.sigma_a = f.num("sigma_a", sc.residual.sigma_a);
    sc.residual.sigma_omega = f.num("sigma_omega", sc.residual.sigma_omega);
    sc.residual.sigma_v = f.num("sigma_v", sc.residual.sigma_v);
    f.finish();
  }

  if (auto it = by_name.find("leg"); it != by_name.end()) {
    Fields f(*it->second, origin);
    sc.leg.l0 = f.num("l0", sc.leg.l0);
    sc.leg.l1 = f.num("l1", sc.leg.l1);
    sc.leg.l2 = f.num("l2", sc.leg.l2);
    sc.leg.l_x = f.num("l_x", sc.leg.l_x);
    sc.leg.l_y = f.num("l_y", sc.leg.l_y);
    sc.leg.l_b = f.num("l_b", sc.leg.l_b);
    sc.leg.h_b = f.num("h_b", sc.leg.h_b);
    sc.leg.joint_limit = f.deg("joint_limit_deg", sc.leg.joint_limit);
    sc.leg.tau_max = f.num("tau_max", sc.leg.tau_max);
    f.finish();
  }

  for (RawSection* osec : obstacles) {
    Fields f(*osec, origin);
    ScenarioObstacle ob;
    ob.s_o = f.req_num("s_o");
    ob.h_o = f.num("h_o", ob.h_o);
    ob.width = f.num("width", ob.width);
    f.finish();
    sc.obstacles.push_back(ob);
  }
  std::sort(sc.obstacles.begin(), sc.obstacles.end(),
            [](const ScenarioObstacle& a, const ScenarioObstacle& b) {
              return a.s_o < b.s_o;
            });

  sc.validate();
  return sc;
}

void Scenario::set_param(const std::string& name, double value) {
  if (name == "run.duration") duration = value;
  else if (name == "run.seed") seed = static_cast<std::uint64_t>(value);
  else if (name == "initial.x") initial.x = value;
  else if (name == "initial.y") initial.y = value;
  else if (name == "initial.psi_deg") initial.psi = deg2rad(value);
  else if (name == "initial.varphi_b_deg") initial.varphi_b = deg2rad(value);
  else if (name == "initial.dot_varphi_b_deg_s")
    initial.dot_varphi_b = deg2rad(value);
  else if (name == "initial.v") initial.v = value;
  else if (name == "initial.phi_deg") initial.phi = deg2rad(value);
  else if (name == "impact.e_x") restitution.e_x = value;
  else if (name == "impact.e_y") restitution.e_y = value;
  else if (name == "impact.e_z") restitution.e_z = value;
  else if (name == "impact.e_exponent") e_exponent = value;
  else if (name == "impulse.r_iy") impulse.r_iy = value;
  else if (name == "impulse.delta_tau_x_max") impulse.delta_tau_x_max = value;
  else if (name == "impulse.f_z_max") impulse.f_z_max = value;
  else if (name == "params.m_b") params.m_b = value;
  else if (name == "params.h_G") params.h_G = value;
  else if (name == "obstacle.h_o") {
    for (auto& ob : obstacles) ob.h_o = value;
  } else if (name == "obstacle.s_o") {
    if (obstacles.empty())
      throw ValidationError("set_param: scenario has no obstacles");
    obstacles.front().s_o = value;
  } else if (name == "obstacle.width") {
    for (auto& ob : obstacles) ob.width = value;
  } else {
    throw ValidationError("set_param: unknown parameter '" + name + "'");
  }
  validate();
}

void Scenario::validate() const {
  if (duration <= 0 || duration > 600)
    throw ValidationError("Scenario: duration must lie in (0, 600] s");
  params.validate();
  limits.validate();
  gains.validate();
  eic.validate();
  restitution.validate();
  if (e_exponent <= 0)
    throw ValidationError("Scenario: e_exponent must be positive");
  impulse.validate();
  supervisor.validate();
  roa.validate();
  residual.validate();
  leg.validate();
  if (!initial.finite())
    throw ValidationError("Scenario: initial state must be finite");
  if (initial.v < 0 || initial.v > limits.v_max)
    throw ValidationError("Scenario: initial speed must lie in [0, v_max]");
  if (std::abs(initial.varphi_b) >= deg2rad(60.0))
    throw ValidationError("Scenario: initial roll must be below 60 deg");
  if (std::abs(initial.phi) > limits.phi_max)
    throw ValidationError("Scenario: initial steer exceeds the travel limit");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const ScenarioObstacle& ob = obstacles[i];
    if (ob.s_o <= 0)
      throw ValidationError("Scenario: obstacle arc length must be positive");
    if (ob.h_o <= 0 || ob.h_o >= params.R_w)
      throw ValidationError(
          "Scenario: obstacle height must lie in (0, R_w)");
    if (ob.width <= 0)
      throw ValidationError("Scenario: obstacle width must be positive");
    // Width is lateral; along the path, steps only need to stay distinct.
    if (i > 0 && ob.s_o - obstacles[i - 1].s_o < 0.05)
      throw ValidationError("Scenario: obstacles overlap along the path");
  }
}

}  // namespace bikecross
