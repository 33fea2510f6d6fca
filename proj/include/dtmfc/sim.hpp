#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dtmfc/common.hpp"
#include "dtmfc/control.hpp"
#include "dtmfc/plant.hpp"
#include "dtmfc/trajectory.hpp"

namespace dtmfc::sim {

enum class ControllerType { kPpi, kIpIp };

struct ControllerConfig {
  ControllerType type = ControllerType::kPpi;
  control::PPIGains ppi{};
  control::IPGains ipip{};
  control::FFConfig ff{};
  double i_max = 20.0;  // drive current limit, A

  void validate() const;
};

/// Optional measurement noise on the two controller inputs. Zero by default,
/// which skips the generator entirely.
struct NoiseConfig {
  double theta_std = 0.0;  // rad
  double omega_std = 0.0;  // rad/s
};

/// Everything one closed-loop run needs. The trajectory must be sampled on
/// the control grid and cover the horizon.
struct Scenario {
  plant::PlantParams plant{};
  bool strict_wear = true;
  ControllerConfig controller{};
  trajectory::Trajectory traj{};
  double h_ctrl = 1e-3;   // controller period, s
  double h_plant = 5e-5;  // plant integration step, s
  double T = 10.0;        // horizon, s
  double w_u = 1e-6;      // effort weight in the scalar objective
  std::uint64_t seed = 0;
  NoiseConfig noise{};

  void validate() const;
  int substeps() const;  // plant steps per control step
};

struct SeriesRow {
  double t = 0.0;
  double theta_ref = 0.0;
  double theta_l = 0.0;
  double omega_m = 0.0;
  double omega_l = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double f_hat_outer = 0.0;
  double f_hat_inner = 0.0;
  bool saturated = false;
};

struct RunResult {
  std::vector<SeriesRow> series;  // empty when record_series is false
  double itae = 0.0;
  double iau = 0.0;
  double j = 0.0;
  bool diverged = false;
  std::size_t diverged_step = 0;  // control step index of the failure
  double t_fail = 0.0;            // last valid sample time, s
};

/// Run the closed loop: measure, control, hold the current over substeps()
/// plant steps, repeat. Divergence is caught, the result is truncated at the
/// failure and flagged instead of propagating the exception. Metrics cover
/// the recorded span.
RunResult run(const Scenario& sc, bool record_series = true);

/// Time-weighted absolute tracking error, trapezoidal rule on the control grid.
double itae(const std::vector<SeriesRow>& series, double h_ctrl);

/// Absolute control effort, trapezoidal rule on the control grid.
double iau(const std::vector<SeriesRow>& series, double h_ctrl);

void write_series_csv(const std::vector<SeriesRow>& series, std::ostream& os);
void write_metrics_json(const RunResult& rr, double w_u, std::ostream& os);

}  // namespace dtmfc::sim
