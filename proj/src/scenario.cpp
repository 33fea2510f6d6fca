#include "dtmfc/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dtmfc::scenario {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(section, "must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ValidationError(section + "." + item.key(), "unknown key");
  }
}

double get_num(const json& j, const std::string& section, const char* key, double def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(section + "." + key, "must be a number");
  return v.get<double>();
}

int get_int(const json& j, const std::string& section, const char* key, int def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(section + "." + key, "must be an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& section, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer()) {
    throw ValidationError(section + "." + key, "must be a non-negative integer");
  }
  const auto sv = v.get<std::int64_t>();
  if (sv < 0) throw ValidationError(section + "." + key, "must be a non-negative integer");
  return static_cast<std::uint64_t>(sv);
}

bool get_bool(const json& j, const std::string& section, const char* key, bool def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ValidationError(section + "." + key, "must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& j, const std::string& section, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ValidationError(section + "." + key, "must be a string");
  return v.get<std::string>();
}

void parse_plant(const json& j, sim::Scenario& sc) {
  check_keys(j, "plant",
             {"f1", "D1", "strict_wear", "Jm", "Jl", "Kt", "Fc", "Fv", "backlash_width",
              "sgn_epsilon", "a_s_mode", "cs_denominator"});
  auto& p = sc.plant;
  p.wear.f1 = get_num(j, "plant", "f1", p.wear.f1);
  p.wear.D1 = get_num(j, "plant", "D1", p.wear.D1);
  sc.strict_wear = get_bool(j, "plant", "strict_wear", sc.strict_wear);
  p.Jm = get_num(j, "plant", "Jm", p.Jm);
  p.Jl = get_num(j, "plant", "Jl", p.Jl);
  p.Kt = get_num(j, "plant", "Kt", p.Kt);
  p.Fc = get_num(j, "plant", "Fc", p.Fc);
  p.Fv = get_num(j, "plant", "Fv", p.Fv);
  p.backlash_width = get_num(j, "plant", "backlash_width", p.backlash_width);
  p.sgn_epsilon = get_num(j, "plant", "sgn_epsilon", p.sgn_epsilon);

  const auto mode = get_str(j, "plant", "a_s_mode", "static");
  if (mode == "static") {
    p.a_s_mode = plant::TorqueMode::kStatic;
  } else if (mode == "integrator") {
    p.a_s_mode = plant::TorqueMode::kIntegrator;
  } else {
    throw ValidationError("plant.a_s_mode", "must be 'static' or 'integrator'");
  }

  const auto cs = get_str(j, "plant", "cs_denominator", "as_printed");
  if (cs == "as_printed") {
    p.cs_denominator = plant::CsDenominator::kAsPrinted;
  } else if (cs == "symmetric") {
    p.cs_denominator = plant::CsDenominator::kSymmetric;
  } else {
    throw ValidationError("plant.cs_denominator", "must be 'as_printed' or 'symmetric'");
  }
}

sim::ControllerType parse_controller_type(const std::string& s, const std::string& where) {
  if (s == "ppi") return sim::ControllerType::kPpi;
  if (s == "ipip") return sim::ControllerType::kIpIp;
  throw ValidationError(where, "must be 'ppi' or 'ipip'");
}

void parse_controller(const json& j, sim::Scenario& sc) {
  check_keys(j, "controller", {"type", "i_max", "ppi", "ipip", "ff"});
  auto& c = sc.controller;
  c.type = parse_controller_type(get_str(j, "controller", "type", "ppi"), "controller.type");
  c.i_max = get_num(j, "controller", "i_max", c.i_max);

  if (j.contains("ppi")) {
    const auto& p = j.at("ppi");
    check_keys(p, "controller.ppi", {"Kp_o", "Kp_i", "Ki_i", "integrator_limit"});
    c.ppi.Kp_o = get_num(p, "controller.ppi", "Kp_o", c.ppi.Kp_o);
    c.ppi.Kp_i = get_num(p, "controller.ppi", "Kp_i", c.ppi.Kp_i);
    c.ppi.Ki_i = get_num(p, "controller.ppi", "Ki_i", c.ppi.Ki_i);
    c.ppi.integrator_limit = get_num(p, "controller.ppi", "integrator_limit", c.ppi.integrator_limit);
  }
  if (j.contains("ipip")) {
    const auto& p = j.at("ipip");
    check_keys(p, "controller.ipip", {"alpha1", "alpha2", "Kp_o_star", "Kp_i_star", "N_d"});
    c.ipip.alpha1 = get_num(p, "controller.ipip", "alpha1", c.ipip.alpha1);
    c.ipip.alpha2 = get_num(p, "controller.ipip", "alpha2", c.ipip.alpha2);
    c.ipip.Kp_o_star = get_num(p, "controller.ipip", "Kp_o_star", c.ipip.Kp_o_star);
    c.ipip.Kp_i_star = get_num(p, "controller.ipip", "Kp_i_star", c.ipip.Kp_i_star);
    c.ipip.N_d = get_int(p, "controller.ipip", "N_d", c.ipip.N_d);
  }
  if (j.contains("ff")) {
    const auto& p = j.at("ff");
    check_keys(p, "controller.ff", {"kinematic_outer", "kinematic_inner", "model_based", "ff_f1", "ff_D1"});
    c.ff.kinematic_outer = get_bool(p, "controller.ff", "kinematic_outer", c.ff.kinematic_outer);
    c.ff.kinematic_inner = get_bool(p, "controller.ff", "kinematic_inner", c.ff.kinematic_inner);
    c.ff.model_based = get_bool(p, "controller.ff", "model_based", c.ff.model_based);
    c.ff.ff_f1 = get_num(p, "controller.ff", "ff_f1", c.ff.ff_f1);
    c.ff.ff_D1 = get_num(p, "controller.ff", "ff_D1", c.ff.ff_D1);
  }
}

void parse_sim(const json& j, sim::Scenario& sc) {
  check_keys(j, "sim", {"h_ctrl", "h_plant", "T", "w_u", "seed", "noise_theta_std", "noise_omega_std"});
  sc.h_ctrl = get_num(j, "sim", "h_ctrl", sc.h_ctrl);
  sc.h_plant = get_num(j, "sim", "h_plant", sc.h_plant);
  sc.T = get_num(j, "sim", "T", sc.T);
  sc.w_u = get_num(j, "sim", "w_u", sc.w_u);
  sc.seed = get_u64(j, "sim", "seed", sc.seed);
  sc.noise.theta_std = get_num(j, "sim", "noise_theta_std", sc.noise.theta_std);
  sc.noise.omega_std = get_num(j, "sim", "noise_omega_std", sc.noise.omega_std);
}

void parse_trajectory(const json& j, const std::filesystem::path& base_dir, sim::Scenario& sc) {
  check_keys(j, "trajectory", {"preset", "file"});
  if (j.contains("preset") && j.contains("file")) {
    throw ValidationError("trajectory", "give either 'preset' or 'file', not both");
  }
  if (j.contains("file")) {
    std::filesystem::path p = get_str(j, "trajectory", "file", "");
    if (p.is_relative()) p = base_dir / p;
    sc.traj = trajectory::trajectory_from_file(p.string());
    return;
  }
  const auto preset = get_str(j, "trajectory", "preset", "benchmark");
  if (preset != "benchmark") throw ValidationError("trajectory.preset", "unknown preset '" + preset + "'");
  sc.traj = trajectory::benchmark_trajectory(sc.h_ctrl);
}

TuneSection parse_tuning(const json& j) {
  check_keys(j, "tuning", {"controller", "max_evals", "tol", "params"});
  TuneSection t;
  t.controller = parse_controller_type(get_str(j, "tuning", "controller", "ppi"), "tuning.controller");
  t.max_evals = get_int(j, "tuning", "max_evals", t.max_evals);
  t.tol = get_num(j, "tuning", "tol", t.tol);
  if (t.max_evals < 3) throw ValidationError("tuning.max_evals", "budget must be at least 3");
  if (!(t.tol > 0.0)) throw ValidationError("tuning.tol", "tolerance must be positive");
  if (j.contains("params")) {
    const auto& ps = j.at("params");
    if (!ps.is_object()) throw ValidationError("tuning.params", "must be an object of {min, max, x0}");
    for (const auto& item : ps.items()) {
      const std::string where = "tuning.params." + item.key();
      check_keys(item.value(), where, {"min", "max", "x0"});
      tuning::ParamSpec spec;
      spec.name = item.key();
      if (!item.value().contains("min") || !item.value().contains("max")) {
        throw ValidationError(where, "needs both 'min' and 'max'");
      }
      spec.lo = get_num(item.value(), where, "min", 0.0);
      spec.hi = get_num(item.value(), where, "max", 0.0);
      spec.x0 = get_num(item.value(), where, "x0", 0.5 * (spec.lo + spec.hi));
      if (!(spec.lo < spec.hi)) throw ValidationError(where, "min must be below max");
      if (spec.x0 < spec.lo || spec.x0 > spec.hi) throw ValidationError(where, "x0 must lie within [min, max]");
      t.params.push_back(std::move(spec));
    }
  }
  return t;
}

MonteCarloSection parse_montecarlo(const json& j) {
  check_keys(j, "montecarlo", {"n_draws", "f1_mean", "f1_std", "D1_mean", "D1_std", "seed"});
  MonteCarloSection m;
  m.n_draws = get_int(j, "montecarlo", "n_draws", m.n_draws);
  m.f1_mean = get_num(j, "montecarlo", "f1_mean", m.f1_mean);
  m.f1_std = get_num(j, "montecarlo", "f1_std", m.f1_std);
  m.D1_mean = get_num(j, "montecarlo", "D1_mean", m.D1_mean);
  m.D1_std = get_num(j, "montecarlo", "D1_std", m.D1_std);
  m.seed = get_u64(j, "montecarlo", "seed", m.seed);
  if (m.n_draws < 1) throw ValidationError("montecarlo.n_draws", "need at least one draw");
  return m;
}

}  // namespace

LoadedScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario", std::string("JSON parse error: ") + e.what());
  }
  check_keys(j, "scenario", {"plant", "controller", "trajectory", "sim", "tuning", "montecarlo"});

  LoadedScenario out;
  if (j.contains("plant")) parse_plant(j.at("plant"), out.scenario);
  if (j.contains("controller")) parse_controller(j.at("controller"), out.scenario);
  if (j.contains("sim")) parse_sim(j.at("sim"), out.scenario);

  const auto base_dir = std::filesystem::path(path).parent_path();
  if (j.contains("trajectory")) {
    parse_trajectory(j.at("trajectory"), base_dir, out.scenario);
  } else {
    out.scenario.traj = trajectory::benchmark_trajectory(out.scenario.h_ctrl);
  }

  if (j.contains("tuning")) out.tune = parse_tuning(j.at("tuning"));
  if (j.contains("montecarlo")) out.montecarlo = parse_montecarlo(j.at("montecarlo"));
  return out;
}

namespace {

struct KeyDoc {
  const char* section;
  const char* key;
  const char* doc;
};

constexpr KeyDoc kKeyDocs[] = {
    {"plant", "f1", "first resonance frequency, Hz (default 55)"},
    {"plant", "D1", "resonance damping ratio (default 0.13)"},
    {"plant", "strict_wear", "enforce the in-service wear domain (default true)"},
    {"plant", "Jm", "motor inertia, kg m^2 (default 0.0125)"},
    {"plant", "Jl", "load inertia, kg m^2 (default 0.0125)"},
    {"plant", "Kt", "torque constant, N m/A (default 1)"},
    {"plant", "Fc", "Coulomb friction, N m (default 0.05)"},
    {"plant", "Fv", "viscous friction, N m s/rad (default 5e-4)"},
    {"plant", "backlash_width", "total gear play, rad (default 1e-3)"},
    {"plant", "sgn_epsilon", "sign regularization width, rad/s (default 1e-3)"},
    {"plant", "a_s_mode", "'static' or 'integrator' torque subsystem (default static)"},
    {"plant", "cs_denominator", "'as_printed' or 'symmetric' coupling damping (default as_printed)"},
    {"controller", "type", "'ppi' or 'ipip' (default ppi)"},
    {"controller", "i_max", "drive current limit, A (default 20)"},
    {"controller", "ppi.Kp_o", "outer position gain, 1/s (default 80)"},
    {"controller", "ppi.Kp_i", "inner speed gain, A s/rad (default 9)"},
    {"controller", "ppi.Ki_i", "inner integral gain, A/rad (default 700)"},
    {"controller", "ppi.integrator_limit", "anti-windup clamp, A (default 10)"},
    {"controller", "ipip.alpha1", "outer control effectiveness (default 12)"},
    {"controller", "ipip.alpha2", "inner control effectiveness (default 110)"},
    {"controller", "ipip.Kp_o_star", "outer iP gain, 1/s (default 80)"},
    {"controller", "ipip.Kp_i_star", "inner iP gain, 1/s (default 60)"},
    {"controller", "ipip.N_d", "derivative window, samples in [2, 21] (default 2)"},
    {"controller", "ff.kinematic_outer", "add the reference speed to the outer output (default true)"},
    {"controller", "ff.kinematic_inner", "add the inertial current to the inner output (default true)"},
    {"controller", "ff.model_based", "anticipatory resonance filter on the speed reference (default false)"},
    {"controller", "ff.ff_f1", "filter resonance frequency, Hz (default 55)"},
    {"controller", "ff.ff_D1", "filter damping ratio (default 0.13)"},
    {"trajectory", "preset", "'benchmark' five-segment profile (default)"},
    {"trajectory", "file", "CSV trajectory, resolved against the scenario directory"},
    {"sim", "h_ctrl", "control period, s (default 1e-3)"},
    {"sim", "h_plant", "plant step, s, must divide h_ctrl (default 5e-5)"},
    {"sim", "T", "horizon, s (default 10)"},
    {"sim", "w_u", "effort weight in J = ITAE + w_u IAU (default 1e-6)"},
    {"sim", "seed", "measurement noise seed (default 0)"},
    {"sim", "noise_theta_std", "position measurement noise, rad (default 0)"},
    {"sim", "noise_omega_std", "speed measurement noise, rad/s (default 0)"},
    {"tuning", "controller", "'ppi' or 'ipip': which gains to tune (default ppi)"},
    {"tuning", "max_evals", "objective evaluation budget (default 400)"},
    {"tuning", "tol", "relative simplex spread tolerance (default 1e-4)"},
    {"tuning", "params", "object of name -> {min, max, x0}; omit for defaults"},
    {"montecarlo", "n_draws", "number of wear draws (default 200)"},
    {"montecarlo", "f1_mean", "f1 distribution mean, Hz (default 55)"},
    {"montecarlo", "f1_std", "f1 distribution std, Hz (default 4)"},
    {"montecarlo", "D1_mean", "D1 distribution mean (default 0.13)"},
    {"montecarlo", "D1_std", "D1 distribution std (default 0.01)"},
    {"montecarlo", "seed", "draw seed (default 1)"},
};

}  // namespace

std::string key_reference(std::span<const char* const> sections) {
  std::ostringstream os;
  os << "Scenario keys:\n";
  for (const char* sec : sections) {
    for (const auto& d : kKeyDocs) {
      if (std::string_view(d.section) == sec) {
        os << "  " << d.section << '.' << d.key << "  " << d.doc << '\n';
      }
    }
  }
  return os.str();
}

void write_tuned_gains_json(const std::string& controller, const std::vector<tuning::ParamSpec>& params,
                            const std::vector<double>& x, double j, std::ostream& os) {
  os << "{\n  \"controller\": \"" << controller << "\",\n  \"gains\": {\n";
  for (std::size_t i = 0; i < params.size(); ++i) {
    os << "    \"" << params[i].name << "\": " << format_double(x[i]);
    os << (i + 1 < params.size() ? ",\n" : "\n");
  }
  os << "  },\n  \"j\": " << format_double(j) << "\n}\n";
}

TunedGains read_tuned_gains_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("tuned_gains", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("tuned_gains", std::string("JSON parse error: ") + e.what());
  }
  check_keys(j, "tuned_gains", {"controller", "gains", "j"});
  TunedGains out;
  out.controller = get_str(j, "tuned_gains", "controller", "");
  out.j = get_num(j, "tuned_gains", "j", 0.0);
  if (!j.contains("gains") || !j.at("gains").is_object()) {
    throw ValidationError("tuned_gains.gains", "must be an object");
  }
  for (const auto& item : j.at("gains").items()) {
    if (!item.value().is_number()) throw ValidationError("tuned_gains.gains." + item.key(), "must be a number");
    out.gains.emplace_back(item.key(), item.value().get<double>());
  }
  return out;
}

}  // namespace dtmfc::scenario
