#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtmfc/common.hpp"
#include "dtmfc/sim.hpp"

namespace dtmfc::tuning {

/// One free coordinate of the gain search: box bounds and a start value
/// strictly inside them.
struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  double x0 = 0.5;
};

struct NmOptions {
  int max_evals = 400;
  double tol = 1e-4;  // relative f-spread of the simplex
};

struct NmResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
};

/// Derivative-free simplex search over a box. Coordinates are mapped through
/// a logistic transform, so every evaluated point is strictly inside the
/// bounds. The start point is always the first evaluation; after the spread
/// criterion fires once, the search restarts from the best point with a
/// shrunken simplex and half the original budget. The returned point is the
/// best ever evaluated, never worse than the start.
NmResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& lo, const std::vector<double>& hi,
                         const std::vector<double>& x0, const NmOptions& opt);

struct TuneSpec {
  sim::Scenario scenario{};
  std::vector<ParamSpec> params;
  int max_evals = 400;
  double tol = 1e-4;
};

struct EvalRecord {
  int eval = 0;
  std::vector<double> x;
  double itae = 0.0;
  double iau = 0.0;
  double j = 0.0;
};

struct TuneResult {
  std::vector<double> best_x;
  double best_j = 0.0;
  double best_itae = 0.0;
  double best_iau = 0.0;
  std::vector<EvalRecord> log;
};

/// Free parameters used when a scenario does not list its own: the three
/// classical gains or the four model-free gains, started from the current
/// configuration values.
std::vector<ParamSpec> default_free_params(const sim::ControllerConfig& cfg);

/// Write the values in x into the controller configuration, matching by name.
void apply_params(sim::ControllerConfig& cfg, const std::vector<ParamSpec>& params,
                  const std::vector<double>& x);

/// Minimize J = ITAE + w_u * IAU over the free gains. Diverged runs score
/// 1e6 plus the unfinished portion of the horizon, so earlier failures look
/// worse. Throws OptimizationFailed if no evaluation produced a finite J.
TuneResult tune(const TuneSpec& spec);

void write_tuning_log_csv(const TuneResult& result, const std::vector<ParamSpec>& params,
                          std::ostream& os);

struct MonteCarloSpec {
  int n_draws = 200;
  double f1_mean = 55.0;  // Hz
  double f1_std = 4.0;
  double D1_mean = 0.13;
  double D1_std = 0.01;
  std::uint64_t seed = 1;
  sim::Scenario base{};                  // shared plant constants, trajectory, sim settings
  sim::ControllerConfig controller_a{};  // classical cascade
  sim::ControllerConfig controller_b{};  // model-free cascade

  void validate() const;
};

struct McDraw {
  int draw = 0;
  double f1 = 0.0;
  double D1 = 0.0;
  double itae_a = 0.0;
  double itae_b = 0.0;
  double delta = 0.0;  // itae_a - itae_b; NaN when either run diverged
  bool diverged_a = false;
  bool diverged_b = false;
};

struct MonteCarloResult {
  std::vector<McDraw> draws;
  double fraction_positive = 0.0;  // share of draws with delta > 0, over all draws
  int n_diverged = 0;
};

/// Wear parameters for one draw. Each draw owns an independent generator
/// seeded from (seed, draw index), so the sample set does not depend on
/// evaluation order. Pairs with f1 <= 0 or D1 outside (0, 1) are redrawn.
plant::WearParams sample_wear(const MonteCarloSpec& spec, int draw_index);

std::vector<plant::WearParams> sample_params(const MonteCarloSpec& spec);

MonteCarloResult monte_carlo_serial(const MonteCarloSpec& spec);

/// Same study with the draws spread across threads. Results are identical
/// to the serial path bit for bit. n_threads 0 means the runtime default.
MonteCarloResult monte_carlo_parallel(const MonteCarloSpec& spec, int n_threads = 0);

void write_mc_csv(const MonteCarloResult& result, std::ostream& os);

}  // namespace dtmfc::tuning
