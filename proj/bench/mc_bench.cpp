// Times the Monte Carlo wear study on the serial reference path and the
// OpenMP path, and checks that both produce identical draws.
//
// Usage: mc_bench [n_draws] [threads]

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "dtmfc/sim.hpp"
#include "dtmfc/trajectory.hpp"
#include "dtmfc/tuning.hpp"

using namespace dtmfc;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool identical(const tuning::MonteCarloResult& a, const tuning::MonteCarloResult& b) {
  if (a.draws.size() != b.draws.size()) return false;
  if (a.fraction_positive != b.fraction_positive) return false;
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    const auto& x = a.draws[i];
    const auto& y = b.draws[i];
    const bool same_delta = (x.delta == y.delta) || (x.delta != x.delta && y.delta != y.delta);
    if (x.f1 != y.f1 || x.D1 != y.D1 || x.itae_a != y.itae_a || x.itae_b != y.itae_b ||
        !same_delta) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int n_draws = 24;
  int threads = 0;
  if (argc > 1) n_draws = std::atoi(argv[1]);
  if (argc > 2) threads = std::atoi(argv[2]);
  if (n_draws < 1) {
    std::cerr << "n_draws must be positive\n";
    return 1;
  }

  tuning::MonteCarloSpec spec;
  spec.n_draws = n_draws;
  spec.base.traj = trajectory::benchmark_trajectory(spec.base.h_ctrl);
  spec.controller_a.type = sim::ControllerType::kPpi;
  spec.controller_b.type = sim::ControllerType::kIpIp;

  auto t0 = Clock::now();
  const auto serial = tuning::monte_carlo_serial(spec);
  const double t_serial = seconds_since(t0);

  t0 = Clock::now();
  const auto parallel = tuning::monte_carlo_parallel(spec, threads);
  const double t_parallel = seconds_since(t0);

  std::cout << "draws: " << n_draws << "\n"
            << "serial:   " << t_serial << " s (" << t_serial / n_draws * 1e3 << " ms/draw)\n"
            << "parallel: " << t_parallel << " s (" << t_parallel / n_draws * 1e3 << " ms/draw)\n"
            << "speedup:  " << t_serial / t_parallel << "x\n";

  if (!identical(serial, parallel)) {
    std::cout << "MISMATCH: serial and parallel results differ\n";
    return 1;
  }
  std::cout << "serial and parallel results identical\n";
  return 0;
}
