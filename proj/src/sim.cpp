#include "dtmfc/sim.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <variant>

namespace dtmfc::sim {

void ControllerConfig::validate() const {
  if (type == ControllerType::kPpi) {
    ppi.validate();
  } else {
    ipip.validate();
  }
  ff.validate();
  if (!(i_max > 0.0)) throw ValidationError("controller.i_max", "drive limit must be positive");
}

void Scenario::validate() const {
  if (!(h_ctrl > 0.0)) throw ValidationError("sim.h_ctrl", "control step must be positive");
  if (!(h_plant > 0.0)) throw ValidationError("sim.h_plant", "plant step must be positive");
  if (!(T > 0.0)) throw ValidationError("sim.T", "horizon must be positive");
  if (w_u < 0.0) throw ValidationError("sim.w_u", "effort weight must be non-negative");
  if (noise.theta_std < 0.0 || noise.omega_std < 0.0) {
    throw ValidationError("sim.noise", "noise levels must be non-negative");
  }
  substeps();  // divisibility check
  plant.validate(strict_wear, nullptr);
  controller.validate();

  const auto n = static_cast<std::size_t>(std::llround(T / h_ctrl));
  if (std::abs(static_cast<double>(n) * h_ctrl - T) > 1e-9) {
    throw ValidationError("sim.T", "horizon must be a whole number of control steps");
  }
  if (traj.size() < n + 1) {
    throw ValidationError("trajectory", "trajectory too short for the horizon (need " +
                                            std::to_string(n + 1) + " samples, have " +
                                            std::to_string(traj.size()) + ")");
  }
  if (std::abs(traj.h() - h_ctrl) > 1e-9) {
    throw ValidationError("trajectory", "trajectory must be sampled at the control step");
  }
}

int Scenario::substeps() const {
  const double ratio = h_ctrl / h_plant;
  const auto n = static_cast<int>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    throw ValidationError("sim.h_plant", "h_plant must divide h_ctrl exactly");
  }
  return n;
}

namespace {

using ControllerVariant = std::variant<control::PpiCascade, control::IpIpCascade>;

ControllerVariant make_controller(const Scenario& sc) {
  const double iok = (sc.plant.Jm + sc.plant.Jl) / sc.plant.Kt;
  const double ratio = sc.plant.Jl / sc.plant.Jm;
  if (sc.controller.type == ControllerType::kPpi) {
    return control::PpiCascade(sc.controller.ppi, sc.controller.ff, sc.h_ctrl, iok, ratio,
                               sc.controller.i_max);
  }
  return control::IpIpCascade(sc.controller.ipip, sc.controller.ff, sc.h_ctrl, iok, ratio,
                              sc.controller.i_max);
}

}  // namespace

RunResult run(const Scenario& sc, bool record_series) {
  sc.validate();
  const int substeps = sc.substeps();
  const auto n_steps = static_cast<std::size_t>(std::llround(sc.T / sc.h_ctrl));

  plant::PlantStepper stepper(sc.plant, sc.h_plant, sc.strict_wear);
  ControllerVariant ctl = make_controller(sc);

  const bool with_noise = sc.noise.theta_std > 0.0 || sc.noise.omega_std > 0.0;
  std::mt19937_64 eng(with_noise ? splitmix64(sc.seed) : 0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RunResult rr;
  rr.series.reserve(n_steps + 1);

  for (std::size_t k = 0; k <= n_steps; ++k) {
    const auto out = stepper.outputs();
    double th_meas = out.theta_l;
    double om_meas = out.omega_m;
    if (with_noise) {
      th_meas += sc.noise.theta_std * gauss(eng);
      om_meas += sc.noise.omega_std * gauss(eng);
    }

    const control::CascadeRefs refs{sc.traj.theta_ref[k], sc.traj.dtheta_ref[k],
                                    sc.traj.ddtheta_ref[k]};
    const auto cmd = std::visit([&](auto& c) { return c.step(th_meas, om_meas, refs); }, ctl);

    SeriesRow row;
    row.t = static_cast<double>(k) * sc.h_ctrl;
    row.theta_ref = sc.traj.theta_ref[k];
    row.theta_l = out.theta_l;
    row.omega_m = out.omega_m;
    row.omega_l = out.omega_l;
    row.u1 = cmd.u1;
    row.u2 = cmd.u2;
    row.f_hat_outer = cmd.f_hat_outer;
    row.f_hat_inner = cmd.f_hat_inner;
    row.saturated = cmd.saturated;
    rr.series.push_back(row);

    if (k == n_steps) break;
    try {
      for (int s = 0; s < substeps; ++s) stepper.step(cmd.u2);
    } catch (const SimulationDiverged&) {
      rr.diverged = true;
      rr.diverged_step = k;
      rr.t_fail = row.t;
      break;
    }
  }

  rr.itae = itae(rr.series, sc.h_ctrl);
  rr.iau = iau(rr.series, sc.h_ctrl);
  rr.j = rr.itae + sc.w_u * rr.iau;
  if (!rr.diverged) rr.t_fail = static_cast<double>(n_steps) * sc.h_ctrl;
  if (!record_series) {
    rr.series.clear();
    rr.series.shrink_to_fit();
  }
  return rr;
}

double itae(const std::vector<SeriesRow>& series, double h_ctrl) {
  if (series.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double f = series[k].t * std::abs(series[k].theta_l - series[k].theta_ref);
    const double w = (k == 0 || k + 1 == series.size()) ? 0.5 : 1.0;
    sum += w * f;
  }
  return sum * h_ctrl;
}

double iau(const std::vector<SeriesRow>& series, double h_ctrl) {
  if (series.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double w = (k == 0 || k + 1 == series.size()) ? 0.5 : 1.0;
    sum += w * std::abs(series[k].u2);
  }
  return sum * h_ctrl;
}

void write_series_csv(const std::vector<SeriesRow>& series, std::ostream& os) {
  os << "t,theta_ref,theta_l,omega_m,omega_l,u1,u2,f_hat_outer,f_hat_inner,saturated\n";
  for (const auto& r : series) {
    os << format_double(r.t) << ',' << format_double(r.theta_ref) << ',' << format_double(r.theta_l)
       << ',' << format_double(r.omega_m) << ',' << format_double(r.omega_l) << ','
       << format_double(r.u1) << ',' << format_double(r.u2) << ',' << format_double(r.f_hat_outer)
       << ',' << format_double(r.f_hat_inner) << ',' << (r.saturated ? '1' : '0') << '\n';
  }
}

void write_metrics_json(const RunResult& rr, double w_u, std::ostream& os) {
  os << "{\n"
     << "  \"itae\": " << format_double(rr.itae) << ",\n"
     << "  \"iau\": " << format_double(rr.iau) << ",\n"
     << "  \"j\": " << format_double(rr.j) << ",\n"
     << "  \"w_u\": " << format_double(w_u) << ",\n"
     << "  \"diverged\": " << (rr.diverged ? "true" : "false") << ",\n"
     << "  \"t_fail\": " << format_double(rr.t_fail) << "\n"
     << "}\n";
}

}  // namespace dtmfc::sim
