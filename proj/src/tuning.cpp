#include "dtmfc/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dtmfc::tuning {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

struct BoxMap {
  std::vector<double> lo, hi;

  std::vector<double> to_x(const std::vector<double>& z) const {
    std::vector<double> x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * sigmoid(z[i]);
    return x;
  }

  double to_z1(double x, std::size_t i) const { return logit((x - lo[i]) / (hi[i] - lo[i])); }

  std::vector<double> to_z(const std::vector<double>& x) const {
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = to_z1(x[i], i);
    return z;
  }
};

}  // namespace

NmResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& lo, const std::vector<double>& hi,
                         const std::vector<double>& x0, const NmOptions& opt) {
  const std::size_t n = x0.size();
  if (n == 0) throw ValidationError("tuning.params", "need at least one free parameter");
  if (lo.size() != n || hi.size() != n) {
    throw ValidationError("tuning.params", "bounds must match the parameter count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i])) {
      throw ValidationError("tuning.params", "bounds must be finite with min < max");
    }
    if (x0[i] < lo[i] || x0[i] > hi[i]) {
      throw ValidationError("tuning.params", "start value must lie within the bounds");
    }
  }
  if (opt.max_evals < static_cast<int>(n) + 2) {
    throw ValidationError("tuning.max_evals", "budget too small for one simplex");
  }

  const BoxMap box{lo, hi};
  NmResult best;
  best.f = std::numeric_limits<double>::infinity();
  int evals = 0;
  const int budget_total = opt.max_evals + opt.max_evals / 2;

  auto eval = [&](const std::vector<double>& z) {
    const auto x = box.to_x(z);
    const double fx = f(x);
    ++evals;
    if (fx < best.f) {
      best.f = fx;
      best.x = x;
    }
    return fx;
  };

  struct Vertex {
    std::vector<double> z;
    double f = 0.0;
  };

  auto build_simplex = [&](const std::vector<double>& center_x, double scale) {
    std::vector<Vertex> s;
    s.push_back({box.to_z(center_x), 0.0});
    for (std::size_t i = 0; i < n; ++i) {
      auto x = center_x;
      const double step = scale * (hi[i] - lo[i]);
      x[i] = (x[i] + step <= hi[i] - 1e-12 * (hi[i] - lo[i])) ? x[i] + step : x[i] - step;
      x[i] = std::clamp(x[i], lo[i], hi[i]);
      s.push_back({box.to_z(x), 0.0});
    }
    for (auto& v : s) v.f = eval(v.z);
    return s;
  };

  auto run_phase = [&](std::vector<Vertex> simplex, int phase_budget) {
    auto order = [&simplex] {
      std::sort(simplex.begin(), simplex.end(),
                [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    order();
    const int start_evals = evals;
    while (evals - start_evals < phase_budget && evals < budget_total) {
      const double fb = simplex.front().f;
      const double fw = simplex.back().f;
      if ((fw - fb) / std::max(std::abs(fb), 1e-12) < opt.tol) break;

      std::vector<double> centroid(n, 0.0);
      for (std::size_t v = 0; v + 1 < simplex.size(); ++v) {
        for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].z[i];
      }
      for (double& c : centroid) c /= static_cast<double>(n);

      auto along = [&](double coef) {
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = centroid[i] + coef * (centroid[i] - simplex.back().z[i]);
        return z;
      };

      const auto zr = along(1.0);
      const double fr = eval(zr);
      if (fr < simplex.front().f) {
        const auto ze = along(2.0);
        const double fe = eval(ze);
        simplex.back() = fe < fr ? Vertex{ze, fe} : Vertex{zr, fr};
      } else if (fr < simplex[simplex.size() - 2].f) {
        simplex.back() = {zr, fr};
      } else {
        const bool outside = fr < simplex.back().f;
        const auto zc = along(outside ? 0.5 : -0.5);
        const double fc = eval(zc);
        if (fc < std::min(fr, simplex.back().f)) {
          simplex.back() = {zc, fc};
        } else {
          // Shrink toward the best vertex.
          for (std::size_t v = 1; v < simplex.size(); ++v) {
            for (std::size_t i = 0; i < n; ++i) {
              simplex[v].z[i] = simplex.front().z[i] + 0.5 * (simplex[v].z[i] - simplex.front().z[i]);
            }
            simplex[v].f = eval(simplex[v].z);
            if (evals >= budget_total) break;
          }
        }
      }
      order();
    }
  };

  run_phase(build_simplex(x0, 0.10), opt.max_evals - evals);
  if (evals < budget_total) {
    const auto restart_from = best.x;
    run_phase(build_simplex(restart_from, 0.05), budget_total - evals);
  }

  best.evals = evals;
  return best;
}

std::vector<ParamSpec> default_free_params(const sim::ControllerConfig& cfg) {
  auto inside = [](double v, double lo, double hi) { return std::clamp(v, lo * 1.001, hi * 0.999); };
  if (cfg.type == sim::ControllerType::kPpi) {
    return {
        {"Kp_o", 1.0, 300.0, inside(cfg.ppi.Kp_o, 1.0, 300.0)},
        {"Kp_i", 0.5, 50.0, inside(cfg.ppi.Kp_i, 0.5, 50.0)},
        {"Ki_i", 10.0, 20000.0, inside(cfg.ppi.Ki_i, 10.0, 20000.0)},
    };
  }
  return {
      {"alpha1", 1.0, 500.0, inside(cfg.ipip.alpha1, 1.0, 500.0)},
      {"alpha2", 10.0, 5000.0, inside(cfg.ipip.alpha2, 10.0, 5000.0)},
      {"Kp_o_star", 0.5, 2000.0, inside(cfg.ipip.Kp_o_star, 0.5, 2000.0)},
      {"Kp_i_star", 1.0, 5000.0, inside(cfg.ipip.Kp_i_star, 1.0, 5000.0)},
  };
}

void apply_params(sim::ControllerConfig& cfg, const std::vector<ParamSpec>& params,
                  const std::vector<double>& x) {
  if (params.size() != x.size()) {
    throw ValidationError("tuning.params", "value count does not match parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params[i].name;
    const double v = x[i];
    if (name == "Kp_o") {
      cfg.ppi.Kp_o = v;
    } else if (name == "Kp_i") {
      cfg.ppi.Kp_i = v;
    } else if (name == "Ki_i") {
      cfg.ppi.Ki_i = v;
    } else if (name == "integrator_limit") {
      cfg.ppi.integrator_limit = v;
    } else if (name == "alpha1") {
      cfg.ipip.alpha1 = v;
    } else if (name == "alpha2") {
      cfg.ipip.alpha2 = v;
    } else if (name == "Kp_o_star") {
      cfg.ipip.Kp_o_star = v;
    } else if (name == "Kp_i_star") {
      cfg.ipip.Kp_i_star = v;
    } else {
      throw ValidationError("tuning.params", "unknown free parameter '" + name + "'");
    }
  }
}

TuneResult tune(const TuneSpec& spec) {
  auto params = spec.params;
  if (params.empty()) params = default_free_params(spec.scenario.controller);

  std::vector<double> lo, hi, x0;
  for (const auto& p : params) {
    lo.push_back(p.lo);
    hi.push_back(p.hi);
    x0.push_back(p.x0);
  }

  TuneResult result;
  bool any_finite = false;

  auto objective = [&](const std::vector<double>& x) {
    sim::Scenario sc = spec.scenario;
    apply_params(sc.controller, params, x);
    double j = 0.0;
    double run_itae = 0.0;
    double run_iau = 0.0;
    try {
      const auto rr = sim::run(sc, false);
      run_itae = rr.itae;
      run_iau = rr.iau;
      j = rr.diverged ? 1e6 + (sc.T - rr.t_fail) : rr.j;
    } catch (const ValidationError&) {
      // Gains that fail validation (possible only with hand-written bounds)
      // score like an immediate divergence.
      j = 1e6 + sc.T;
    }
    if (std::isfinite(j)) any_finite = true;
    result.log.push_back({static_cast<int>(result.log.size()) + 1, x, run_itae, run_iau, j});
    return j;
  };

  NmOptions opt;
  opt.max_evals = spec.max_evals;
  opt.tol = spec.tol;
  const auto nm = nelder_mead_box(objective, lo, hi, x0, opt);

  if (!any_finite) throw OptimizationFailed("no evaluation produced a finite objective");

  result.best_x = nm.x;
  result.best_j = nm.f;
  for (const auto& rec : result.log) {
    if (rec.j == nm.f && rec.x == nm.x) {
      result.best_itae = rec.itae;
      result.best_iau = rec.iau;
      break;
    }
  }
  return result;
}

void write_tuning_log_csv(const TuneResult& result, const std::vector<ParamSpec>& params,
                          std::ostream& os) {
  os << "eval";
  for (const auto& p : params) os << ',' << p.name;
  os << ",itae,iau,j\n";
  for (const auto& rec : result.log) {
    os << rec.eval;
    for (double v : rec.x) os << ',' << format_double(v);
    os << ',' << format_double(rec.itae) << ',' << format_double(rec.iau) << ','
       << format_double(rec.j) << '\n';
  }
}

void MonteCarloSpec::validate() const {
  if (n_draws < 1) throw ValidationError("montecarlo.n_draws", "need at least one draw");
  if (!(f1_std >= 0.0) || !(D1_std >= 0.0)) {
    throw ValidationError("montecarlo.std", "standard deviations must be non-negative");
  }
  if (!(f1_mean > 0.0)) throw ValidationError("montecarlo.f1_mean", "mean frequency must be positive");
  if (!(D1_mean > 0.0 && D1_mean < 1.0)) {
    throw ValidationError("montecarlo.D1_mean", "mean damping must lie in (0, 1)");
  }
}

namespace {

// Standard normal from explicit Box-Muller over the raw 64-bit stream, so
// the draw sequence is fixed across standard library implementations.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = unit_open();
    const double v = unit_open();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double phi = 2.0 * std::numbers::pi_v<double> * v;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  double unit_open() {
    // (0, 1]: never zero, so the log stays finite.
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;
  }

  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

McDraw run_draw(const MonteCarloSpec& spec, int i) {
  McDraw d;
  d.draw = i;
  const auto wear = sample_wear(spec, i);
  d.f1 = wear.f1;
  d.D1 = wear.D1;

  sim::Scenario sc = spec.base;
  sc.strict_wear = false;  // tails of the wear distribution stay in play
  sc.plant.wear = wear;

  sc.controller = spec.controller_a;
  const auto ra = sim::run(sc, false);
  d.itae_a = ra.itae;
  d.diverged_a = ra.diverged;

  sc.controller = spec.controller_b;
  const auto rb = sim::run(sc, false);
  d.itae_b = rb.itae;
  d.diverged_b = rb.diverged;

  d.delta = (ra.diverged || rb.diverged) ? std::numeric_limits<double>::quiet_NaN()
                                         : ra.itae - rb.itae;
  return d;
}

MonteCarloResult aggregate(std::vector<McDraw> draws) {
  MonteCarloResult res;
  int positive = 0;
  for (const auto& d : draws) {
    if (d.diverged_a || d.diverged_b) ++res.n_diverged;
    if (d.delta > 0.0) ++positive;  // NaN compares false
  }
  res.fraction_positive = static_cast<double>(positive) / static_cast<double>(draws.size());
  res.draws = std::move(draws);
  return res;
}

}  // namespace

plant::WearParams sample_wear(const MonteCarloSpec& spec, int draw_index) {
  const std::uint64_t stream =
      splitmix64(spec.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(draw_index + 1));
  NormalSource normal(stream);
  plant::WearParams w;
  do {
    w.f1 = spec.f1_mean + spec.f1_std * normal.next();
    w.D1 = spec.D1_mean + spec.D1_std * normal.next();
  } while (!(w.f1 > 0.0) || !(w.D1 > 0.0 && w.D1 < 1.0));
  return w;
}

std::vector<plant::WearParams> sample_params(const MonteCarloSpec& spec) {
  spec.validate();
  std::vector<plant::WearParams> out;
  out.reserve(static_cast<std::size_t>(spec.n_draws));
  for (int i = 0; i < spec.n_draws; ++i) out.push_back(sample_wear(spec, i));
  return out;
}

MonteCarloResult monte_carlo_serial(const MonteCarloSpec& spec) {
  spec.validate();
  std::vector<McDraw> draws(static_cast<std::size_t>(spec.n_draws));
  for (int i = 0; i < spec.n_draws; ++i) draws[static_cast<std::size_t>(i)] = run_draw(spec, i);
  return aggregate(std::move(draws));
}

MonteCarloResult monte_carlo_parallel(const MonteCarloSpec& spec, int n_threads) {
  spec.validate();
  std::vector<McDraw> draws(static_cast<std::size_t>(spec.n_draws));
#ifdef _OPENMP
  const int nt = n_threads > 0 ? n_threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (int i = 0; i < spec.n_draws; ++i) draws[static_cast<std::size_t>(i)] = run_draw(spec, i);
#else
  (void)n_threads;
  for (int i = 0; i < spec.n_draws; ++i) draws[static_cast<std::size_t>(i)] = run_draw(spec, i);
#endif
  return aggregate(std::move(draws));
}

void write_mc_csv(const MonteCarloResult& result, std::ostream& os) {
  os << "draw,f1,D1,itae_ppi,itae_ipip,delta,diverged\n";
  for (const auto& d : result.draws) {
    os << d.draw << ',' << format_double(d.f1) << ',' << format_double(d.D1) << ','
       << format_double(d.itae_a) << ',' << format_double(d.itae_b) << ','
       << format_double(d.delta) << ',' << ((d.diverged_a || d.diverged_b) ? '1' : '0') << '\n';
  }
}

}  // namespace dtmfc::tuning
