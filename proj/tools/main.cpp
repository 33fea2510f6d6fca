// drivetrain_mfc: closed-loop studies of a two-mass machine-tool axis under
// classical P-PI and model-free iP-iP cascade control.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "dtmfc/common.hpp"
#include "dtmfc/scenario.hpp"
#include "dtmfc/sim.hpp"
#include "dtmfc/svg.hpp"
#include "dtmfc/tuning.hpp"

namespace fs = std::filesystem;
using namespace dtmfc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitTuningFailed = 4;

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir;
  std::int64_t seed = -1;  // -1: keep the scenario's seed
  int threads = 0;
};

void add_common(CLI::App* sub, CommonArgs& args, std::initializer_list<const char*> sections) {
  sub->add_option("scenario", args.scenario_path, "scenario JSON file")->required();
  sub->add_option("--out", args.out_dir, "output directory (created if missing)")->required();
  sub->add_option("--seed", args.seed, "override the scenario seed");
  sub->add_option("--threads", args.threads, "worker threads for parallel studies")
      ->envname("DRIVETRAIN_MFC_THREADS");
  std::vector<const char*> secs(sections);
  sub->footer(scenario::key_reference(std::span<const char* const>(secs.data(), secs.size())));
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("out", "cannot write '" + path.string() + "'");
  os << content;
}

scenario::LoadedScenario load_with_overrides(const CommonArgs& args) {
  auto loaded = scenario::load_scenario_file(args.scenario_path);
  if (args.seed >= 0) {
    loaded.scenario.seed = static_cast<std::uint64_t>(args.seed);
    if (loaded.montecarlo) loaded.montecarlo->seed = static_cast<std::uint64_t>(args.seed);
  }
  fs::create_directories(args.out_dir);
  return loaded;
}

std::string error_series_svg(const sim::RunResult& rr) {
  svg::Series err{"theta_ref - theta_l", "#c33", {}, {}};
  err.x.reserve(rr.series.size());
  err.y.reserve(rr.series.size());
  for (const auto& row : rr.series) {
    err.x.push_back(row.t);
    err.y.push_back(row.theta_ref - row.theta_l);
  }
  return svg::line_chart("Tracking error", "t [s]", "error [rad]", {err});
}

int cmd_simulate(const CommonArgs& args) {
  const auto loaded = load_with_overrides(args);
  const auto rr = sim::run(loaded.scenario, true);

  const fs::path out(args.out_dir);
  {
    std::ofstream os(out / "series.csv", std::ios::binary);
    sim::write_series_csv(rr.series, os);
  }
  {
    std::ofstream os(out / "metrics.json", std::ios::binary);
    sim::write_metrics_json(rr, loaded.scenario.w_u, os);
  }
  write_text_file(out / "tracking_error.svg", error_series_svg(rr));

  std::cout << "ITAE = " << format_double(rr.itae) << "\n"
            << "IAU = " << format_double(rr.iau) << "\n"
            << "J = " << format_double(rr.j) << "\n";
  if (rr.diverged) {
    std::cerr << "run diverged at t = " << format_double(rr.t_fail) << " s (control step "
              << rr.diverged_step << "); partial artifacts written\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_tune(const CommonArgs& args) {
  const auto loaded = load_with_overrides(args);
  if (!loaded.tune) {
    throw ValidationError("tuning", "scenario has no tuning section");
  }

  tuning::TuneSpec spec;
  spec.scenario = loaded.scenario;
  spec.scenario.controller.type = loaded.tune->controller;
  spec.max_evals = loaded.tune->max_evals;
  spec.tol = loaded.tune->tol;
  spec.params = loaded.tune->params;
  if (spec.params.empty()) spec.params = tuning::default_free_params(spec.scenario.controller);

  const auto result = tuning::tune(spec);

  const fs::path out(args.out_dir);
  const std::string ctrl_name =
      loaded.tune->controller == sim::ControllerType::kPpi ? "ppi" : "ipip";
  {
    std::ofstream os(out / "tuned_gains.json", std::ios::binary);
    scenario::write_tuned_gains_json(ctrl_name, spec.params, result.best_x, result.best_j, os);
  }
  {
    std::ofstream os(out / "tuning_log.csv", std::ios::binary);
    tuning::write_tuning_log_csv(result, spec.params, os);
  }

  std::cout << "tuned " << ctrl_name << ": J = " << format_double(result.best_j) << " after "
            << result.log.size() << " evaluations\n";
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    std::cout << "  " << spec.params[i].name << " = " << format_double(result.best_x[i]) << "\n";
  }
  return kExitOk;
}

// Tuned gains for one controller at the scenario's wear point, reusing a
// cache file in the output directory when one exists.
std::vector<double> tuned_gains_cached(const sim::Scenario& base, sim::ControllerType type,
                                       const std::optional<scenario::TuneSection>& tune_section,
                                       const std::vector<tuning::ParamSpec>& params,
                                       const fs::path& out) {
  const std::string ctrl_name = type == sim::ControllerType::kPpi ? "ppi" : "ipip";
  const fs::path cache = out / ("tuned_" + ctrl_name + "_f" + format_double(base.plant.wear.f1) +
                                "_D" + format_double(base.plant.wear.D1) + ".json");
  if (fs::exists(cache)) {
    const auto cached = scenario::read_tuned_gains_json(cache.string());
    if (cached.controller == ctrl_name && cached.gains.size() == params.size()) {
      std::vector<double> x;
      for (const auto& p : params) {
        for (const auto& [name, value] : cached.gains) {
          if (name == p.name) x.push_back(value);
        }
      }
      if (x.size() == params.size()) {
        std::cerr << "using cached gains from " << cache.string() << "\n";
        return x;
      }
    }
    std::cerr << "ignoring incompatible cache " << cache.string() << "\n";
  }

  tuning::TuneSpec spec;
  spec.scenario = base;
  spec.scenario.controller.type = type;
  if (tune_section) {
    spec.max_evals = tune_section->max_evals;
    spec.tol = tune_section->tol;
  }
  spec.params = params;
  const auto result = tuning::tune(spec);
  std::ofstream os(cache, std::ios::binary);
  scenario::write_tuned_gains_json(ctrl_name, params, result.best_x, result.best_j, os);
  return result.best_x;
}

int cmd_compare(const CommonArgs& args) {
  const auto loaded = load_with_overrides(args);
  const fs::path out(args.out_dir);
  const sim::Scenario& base = loaded.scenario;

  struct ConfigRow {
    std::string name;
    sim::RunResult rr;
  };
  std::vector<ConfigRow> rows;
  std::string csv = "config,itae,iau,j,diverged\n";
  auto add_row = [&](const std::string& name, const sim::Scenario& sc) {
    ConfigRow row{name, sim::run(sc, true)};
    csv += name + ',' + format_double(row.rr.itae) + ',' + format_double(row.rr.iau) + ',' +
           format_double(row.rr.j) + ',' + (row.rr.diverged ? '1' : '0') + '\n';
    rows.push_back(std::move(row));
  };
  auto flush = [&] {
    write_text_file(out / "comparison.csv", csv);
    std::vector<svg::Series> overlay;
    const char* colors[] = {"#888", "#36c", "#c33", "#2a7", "#a3c"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      svg::Series s{rows[i].name, colors[i % 5], {}, {}};
      for (const auto& r : rows[i].rr.series) {
        s.x.push_back(r.t);
        s.y.push_back(r.theta_ref - r.theta_l);
      }
      overlay.push_back(std::move(s));
    }
    write_text_file(out / "tracking_overlay.svg",
                    svg::line_chart("Tracking error by configuration", "t [s]", "error [rad]", overlay));
  };

  // Default classical gains first: the degradation baseline.
  {
    sim::Scenario sc = base;
    sc.controller.type = sim::ControllerType::kPpi;
    sc.controller.ff.model_based = false;
    add_row("ppi_default", sc);
  }

  try {
    sim::Scenario tune_base = base;
    tune_base.controller.ff.model_based = false;

    const auto ppi_params = tuning::default_free_params([&] {
      auto c = tune_base.controller;
      c.type = sim::ControllerType::kPpi;
      return c;
    }());
    const auto ppi_x =
        tuned_gains_cached(tune_base, sim::ControllerType::kPpi, loaded.tune, ppi_params, out);
    {
      sim::Scenario sc = tune_base;
      sc.controller.type = sim::ControllerType::kPpi;
      tuning::apply_params(sc.controller, ppi_params, ppi_x);
      add_row("ppi_tuned", sc);
    }

    const auto ipip_params = tuning::default_free_params([&] {
      auto c = tune_base.controller;
      c.type = sim::ControllerType::kIpIp;
      return c;
    }());
    const auto ipip_x =
        tuned_gains_cached(tune_base, sim::ControllerType::kIpIp, loaded.tune, ipip_params, out);
    sim::Scenario ipip_sc = tune_base;
    ipip_sc.controller.type = sim::ControllerType::kIpIp;
    tuning::apply_params(ipip_sc.controller, ipip_params, ipip_x);
    add_row("ipip_tuned", ipip_sc);

    // Same tuned gains with the anticipatory filter, first matched to the
    // true wear point, then deliberately mismatched to the far corner of
    // the wear domain.
    {
      sim::Scenario sc = ipip_sc;
      sc.controller.ff.model_based = true;
      sc.controller.ff.ff_f1 = base.plant.wear.f1;
      sc.controller.ff.ff_D1 = base.plant.wear.D1;
      add_row("ipip_tuned_ff", sc);
    }
    {
      sim::Scenario sc = ipip_sc;
      sc.controller.ff.model_based = true;
      const bool near_upper = (base.plant.wear.f1 - plant::kF1Min) +
                                  (base.plant.wear.D1 - plant::kD1Min) * 100.0 >
                              (plant::kF1Max - base.plant.wear.f1) +
                                  (plant::kD1Max - base.plant.wear.D1) * 100.0;
      sc.controller.ff.ff_f1 = near_upper ? plant::kF1Min : plant::kF1Max;
      sc.controller.ff.ff_D1 = near_upper ? plant::kD1Min : plant::kD1Max;
      add_row("ipip_tuned_ff_wrong", sc);
    }
  } catch (const OptimizationFailed& e) {
    flush();
    std::cerr << "tuning failed: " << e.what() << "; partial comparison written\n";
    return kExitTuningFailed;
  }

  flush();
  for (const auto& row : rows) {
    std::cout << row.name << ": ITAE = " << format_double(row.rr.itae)
              << ", IAU = " << format_double(row.rr.iau) << ", J = " << format_double(row.rr.j)
              << (row.rr.diverged ? " (diverged)" : "") << "\n";
  }
  return kExitOk;
}

int cmd_montecarlo(const CommonArgs& args) {
  const auto loaded = load_with_overrides(args);
  if (!loaded.montecarlo) {
    throw ValidationError("montecarlo", "scenario has no montecarlo section");
  }

  tuning::MonteCarloSpec spec;
  spec.n_draws = loaded.montecarlo->n_draws;
  spec.f1_mean = loaded.montecarlo->f1_mean;
  spec.f1_std = loaded.montecarlo->f1_std;
  spec.D1_mean = loaded.montecarlo->D1_mean;
  spec.D1_std = loaded.montecarlo->D1_std;
  spec.seed = loaded.montecarlo->seed;
  spec.base = loaded.scenario;
  spec.controller_a = loaded.scenario.controller;
  spec.controller_a.type = sim::ControllerType::kPpi;
  spec.controller_a.ff.model_based = false;
  spec.controller_b = loaded.scenario.controller;
  spec.controller_b.type = sim::ControllerType::kIpIp;
  spec.controller_b.ff.model_based = false;

  const auto result = args.threads == 1 ? tuning::monte_carlo_serial(spec)
                                        : tuning::monte_carlo_parallel(spec, args.threads);

  const fs::path out(args.out_dir);
  {
    std::ofstream os(out / "montecarlo.csv", std::ios::binary);
    tuning::write_mc_csv(result, os);
  }
  std::vector<double> deltas, f1s, d1s;
  for (const auto& d : result.draws) {
    deltas.push_back(d.delta);
    f1s.push_back(d.f1);
    d1s.push_back(d.D1);
  }
  write_text_file(out / "stem.svg",
                  svg::stem_chart("ITAE improvement per draw (classical minus model-free)",
                                  "delta ITAE [rad s^2]", deltas));
  write_text_file(out / "histograms.svg",
                  svg::histogram_pair("Sampled wear parameters", "f1 [Hz]", f1s, "D1", d1s));

  char frac[32];
  std::snprintf(frac, sizeof(frac), "%.3f", result.fraction_positive);
  std::cout << "fraction_positive = " << frac << "\n"
            << "diverged draws = " << result.n_diverged << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Closed-loop studies of a two-mass machine-tool axis: classical P-PI cascade\n"
      "against a model-free iP-iP cascade, with gain tuning, feedforward variants\n"
      "and Monte Carlo robustness over mechanical wear."};
  app.require_subcommand(1);

  CommonArgs sim_args, tune_args, cmp_args, mc_args;
  auto* sub_sim = app.add_subcommand("simulate", "run one closed-loop scenario");
  add_common(sub_sim, sim_args, {"plant", "controller", "trajectory", "sim"});
  auto* sub_tune = app.add_subcommand("tune", "search controller gains minimizing J");
  add_common(sub_tune, tune_args, {"plant", "controller", "trajectory", "sim", "tuning"});
  auto* sub_cmp = app.add_subcommand("compare", "five-configuration controller comparison");
  add_common(sub_cmp, cmp_args, {"plant", "controller", "trajectory", "sim", "tuning"});
  auto* sub_mc = app.add_subcommand("montecarlo", "robustness study over wear draws");
  add_common(sub_mc, mc_args, {"plant", "controller", "trajectory", "sim", "montecarlo"});

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_sim->parsed()) return cmd_simulate(sim_args);
    if (sub_tune->parsed()) return cmd_tune(tune_args);
    if (sub_cmp->parsed()) return cmd_compare(cmp_args);
    if (sub_mc->parsed()) return cmd_montecarlo(mc_args);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const OptimizationFailed& e) {
    std::cerr << "tuning failed: " << e.what() << "\n";
    return kExitTuningFailed;
  } catch (const SimulationDiverged& e) {
    std::cerr << "simulation diverged: " << e.what() << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}
