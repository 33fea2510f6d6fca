#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtmfc/common.hpp"

namespace dtmfc::trajectory {

struct TrajectoryMeta {
  std::string name;
  bool synthesized_derivatives = false;  // derivatives filled in by finite differences
};

/// Reference motion sampled on a uniform grid: load angle and its first two
/// time derivatives.
struct Trajectory {
  std::vector<double> t;
  std::vector<double> theta_ref;
  std::vector<double> dtheta_ref;
  std::vector<double> ddtheta_ref;
  TrajectoryMeta meta;

  std::size_t size() const { return t.size(); }
  double h() const;  // grid spacing, from the first interval
};

/// Benchmark point-to-point profile: quintic smoothstep segments through
/// 0, +1, -0.5, +0.75, -1, 0 rad at 0, 2, 4, 6, 8, 10 s. Position, speed and
/// acceleration are continuous; speed and acceleration vanish at every
/// waypoint; the load reverses direction four times. Derivatives are exact.
Trajectory benchmark_trajectory(double h_ctrl);

/// Load a trajectory from CSV with header `t,theta_ref` or
/// `t,theta_ref,dtheta_ref,ddtheta_ref`. The time column must be uniform
/// (within 1e-9 s) and strictly increasing. Missing derivative columns are
/// synthesized by second-order finite differences and flagged in the meta.
Trajectory trajectory_from_file(const std::string& path);

/// Write the four-column CSV form. format/parse round-trips are bit exact.
void write_trajectory_csv(const Trajectory& tr, std::ostream& os);

}  // namespace dtmfc::trajectory
