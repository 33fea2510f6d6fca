#include "dtmfc/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dtmfc::trajectory {

namespace {

constexpr std::array<double, 6> kTimes{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
constexpr std::array<double, 6> kAngles{0.0, 1.0, -0.5, 0.75, -1.0, 0.0};

// Quintic smoothstep between q0 and q1 over a segment of length dt,
// tau = local time / dt in [0, 1]. Zero speed and acceleration at both ends.
void quintic_eval(double tau, double dt, double q0, double q1, double& th, double& dth,
                  double& ddth) {
  const double d = q1 - q0;
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  const double t4 = t3 * tau;
  const double t5 = t4 * tau;
  th = q0 + d * (10.0 * t3 - 15.0 * t4 + 6.0 * t5);
  dth = d * (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / dt;
  ddth = d * (60.0 * tau - 180.0 * t2 + 120.0 * t3) / (dt * dt);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Second-order finite differences on a uniform grid: centered in the
// interior, one-sided at the ends.
std::vector<double> fd_derivative(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) {
    if (n == 2) d[0] = d[1] = (y[1] - y[0]) / h;
    return d;
  }
  d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
  return d;
}

}  // namespace

double Trajectory::h() const {
  if (t.size() < 2) throw ValidationError("trajectory", "need at least two samples");
  return t[1] - t[0];
}

Trajectory benchmark_trajectory(double h_ctrl) {
  if (!(h_ctrl > 0.0) || h_ctrl > 0.01) {
    throw ValidationError("sim.h_ctrl", "control step must lie in (0, 0.01] s");
  }
  const double T = kTimes.back();
  const auto n = static_cast<std::size_t>(std::llround(T / h_ctrl));
  if (std::abs(static_cast<double>(n) * h_ctrl - T) > 1e-9) {
    throw ValidationError("sim.h_ctrl", "control step must divide the 10 s horizon");
  }

  Trajectory tr;
  tr.meta.name = "benchmark";
  tr.t.resize(n + 1);
  tr.theta_ref.resize(n + 1);
  tr.dtheta_ref.resize(n + 1);
  tr.ddtheta_ref.resize(n + 1);

  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * h_ctrl;
    auto it = std::upper_bound(kTimes.begin(), kTimes.end(), t);
    auto seg = static_cast<std::size_t>(std::distance(kTimes.begin(), it));
    seg = std::clamp<std::size_t>(seg, 1, kTimes.size() - 1) - 1;
    const double dt = kTimes[seg + 1] - kTimes[seg];
    const double tau = (t - kTimes[seg]) / dt;
    tr.t[k] = t;
    quintic_eval(tau, dt, kAngles[seg], kAngles[seg + 1], tr.theta_ref[k], tr.dtheta_ref[k],
                 tr.ddtheta_ref[k]);
  }
  return tr;
}

Trajectory trajectory_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("trajectory.file", "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trajectory.file", "empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  bool has_derivatives = false;
  if (line == "t,theta_ref") {
    has_derivatives = false;
  } else if (line == "t,theta_ref,dtheta_ref,ddtheta_ref") {
    has_derivatives = true;
  } else {
    throw ValidationError("trajectory.file",
                          "header must be 't,theta_ref' or 't,theta_ref,dtheta_ref,ddtheta_ref'");
  }

  Trajectory tr;
  tr.meta.name = std::filesystem::path(path).stem().string();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::size_t want = has_derivatives ? 4 : 2;
    if (fields.size() != want) {
      throw ValidationError("trajectory.file", "line " + std::to_string(lineno) + ": expected " +
                                                   std::to_string(want) + " columns");
    }
    try {
      tr.t.push_back(parse_double(fields[0]));
      tr.theta_ref.push_back(parse_double(fields[1]));
      if (has_derivatives) {
        tr.dtheta_ref.push_back(parse_double(fields[2]));
        tr.ddtheta_ref.push_back(parse_double(fields[3]));
      }
    } catch (const ValidationError&) {
      throw ValidationError("trajectory.file", "line " + std::to_string(lineno) + ": bad number");
    }
  }
  if (tr.t.size() < 2) throw ValidationError("trajectory.file", "need at least two samples");

  const double h = tr.t[1] - tr.t[0];
  if (!(h > 0.0)) throw ValidationError("trajectory.file", "time column must be increasing");
  for (std::size_t i = 1; i < tr.t.size(); ++i) {
    if (std::abs(tr.t[i] - tr.t[i - 1] - h) > 1e-9) {
      throw ValidationError("trajectory.file",
                            "time grid must be uniform within 1e-9 s (row " + std::to_string(i + 1) + ")");
    }
  }

  if (!has_derivatives) {
    tr.dtheta_ref = fd_derivative(tr.theta_ref, h);
    tr.ddtheta_ref = fd_derivative(tr.dtheta_ref, h);
    tr.meta.synthesized_derivatives = true;
  }
  return tr;
}

void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
  os << "t,theta_ref,dtheta_ref,ddtheta_ref\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << format_double(tr.t[k]) << ',' << format_double(tr.theta_ref[k]) << ','
       << format_double(tr.dtheta_ref[k]) << ',' << format_double(tr.ddtheta_ref[k]) << '\n';
  }
}

}  // namespace dtmfc::trajectory
