#pragma once

#include <optional>
#include <span>
#include <string>

#include "dtmfc/sim.hpp"
#include "dtmfc/tuning.hpp"

namespace dtmfc::scenario {

/// Tuning request attached to a scenario: which controller to tune, the
/// search budget and (optionally) explicit free parameters.
struct TuneSection {
  sim::ControllerType controller = sim::ControllerType::kPpi;
  int max_evals = 400;
  double tol = 1e-4;
  std::vector<tuning::ParamSpec> params;  // empty: defaults for the controller
};

struct MonteCarloSection {
  int n_draws = 200;
  double f1_mean = 55.0;
  double f1_std = 4.0;
  double D1_mean = 0.13;
  double D1_std = 0.01;
  std::uint64_t seed = 1;
};

struct LoadedScenario {
  sim::Scenario scenario;
  std::optional<TuneSection> tune;
  std::optional<MonteCarloSection> montecarlo;
};

/// Parse a scenario JSON file. Every key is optional and defaulted; unknown
/// keys are rejected with the offending path in the error. Relative
/// trajectory file paths resolve against the scenario's directory.
LoadedScenario load_scenario_file(const std::string& path);

/// Human-readable table of the scenario keys in the given sections, used as
/// the --help footer. Sections: plant, controller, trajectory, sim, tuning,
/// montecarlo.
std::string key_reference(std::span<const char* const> sections);

/// Tuned-gains artifact: {"controller": ..., "gains": {name: value}, "j": ...}.
void write_tuned_gains_json(const std::string& controller, const std::vector<tuning::ParamSpec>& params,
                            const std::vector<double>& x, double j, std::ostream& os);

struct TunedGains {
  std::string controller;
  std::vector<std::pair<std::string, double>> gains;
  double j = 0.0;
};

TunedGains read_tuned_gains_json(const std::string& path);

}  // namespace dtmfc::scenario
