#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtmfc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace dtmfc;
using sim::RunResult;
using sim::Scenario;
using sim::SeriesRow;

namespace {

// Short point-to-point move: quintic rise 0 -> 0.3 rad over the first
// second, then a dwell. Keeps closed-loop tests fast while still exercising
// acceleration and settling.
trajectory::Trajectory short_traj(double h) {
  trajectory::Trajectory tr;
  tr.meta.name = "short";
  const double T = 1.2;
  const auto n = static_cast<std::size_t>(std::llround(T / h));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * h;
    tr.t.push_back(t);
    if (t < 1.0) {
      const double tau = t;
      const double t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau, t5 = t4 * tau;
      tr.theta_ref.push_back(0.3 * (10.0 * t3 - 15.0 * t4 + 6.0 * t5));
      tr.dtheta_ref.push_back(0.3 * (30.0 * t2 - 60.0 * t3 + 30.0 * t4));
      tr.ddtheta_ref.push_back(0.3 * (60.0 * tau - 180.0 * t2 + 120.0 * t3));
    } else {
      tr.theta_ref.push_back(0.3);
      tr.dtheta_ref.push_back(0.0);
      tr.ddtheta_ref.push_back(0.0);
    }
  }
  return tr;
}

Scenario short_scenario(double h_ctrl = 1e-3) {
  Scenario sc;
  sc.traj = short_traj(h_ctrl);
  sc.h_ctrl = h_ctrl;
  sc.h_plant = h_ctrl / 20.0;
  sc.T = 1.2;
  return sc;
}

std::vector<SeriesRow> constant_error_series(double err, double u2, double h, double T) {
  std::vector<SeriesRow> rows;
  const auto n = static_cast<std::size_t>(std::llround(T / h));
  for (std::size_t k = 0; k <= n; ++k) {
    SeriesRow r;
    r.t = static_cast<double>(k) * h;
    r.theta_ref = 0.5;
    r.theta_l = 0.5 - err;
    r.u2 = u2;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("itae closed forms") {
  SUBCASE("degenerate series") {
    CHECK(sim::itae({}, 1e-3) == 0.0);
    CHECK(sim::itae({SeriesRow{}}, 1e-3) == 0.0);
  }
  SUBCASE("constant error over 10 s") {
    // integral of t * 1e-3 over [0, 10] = 0.05, exact under the trapezoidal
    // rule because the integrand is linear in t.
    const auto rows = constant_error_series(1e-3, 0.0, 1e-3, 10.0);
    CHECK(sim::itae(rows, 1e-3) == doctest::Approx(0.05).epsilon(1e-9));
  }
  SUBCASE("linearly growing error") {
    // theta_ref - theta_l = t over [0, 1]: integral of t^2 is 1/3.
    std::vector<SeriesRow> rows;
    for (std::size_t k = 0; k <= 1000; ++k) {
      SeriesRow r;
      r.t = static_cast<double>(k) * 1e-3;
      r.theta_ref = r.t;
      rows.push_back(r);
    }
    CHECK(sim::itae(rows, 1e-3) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  }
  SUBCASE("scaling in the error") {
    const auto a = constant_error_series(2e-3, 0.0, 1e-3, 2.0);
    const auto b = constant_error_series(4e-3, 0.0, 1e-3, 2.0);
    CHECK(sim::itae(b, 1e-3) == doctest::Approx(2.0 * sim::itae(a, 1e-3)).epsilon(1e-12));
  }
}

TEST_CASE("iau closed forms") {
  SUBCASE("unit command over 10 s") {
    const auto rows = constant_error_series(0.0, 1.0, 1e-3, 10.0);
    CHECK(sim::iau(rows, 1e-3) == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("rectified sine over 10 s") {
    // |sin(2*pi*t)| integrates to 2/pi per second.
    std::vector<SeriesRow> rows;
    for (std::size_t k = 0; k <= 10000; ++k) {
      SeriesRow r;
      r.t = static_cast<double>(k) * 1e-3;
      r.u2 = std::sin(2.0 * std::numbers::pi * r.t);
      rows.push_back(r);
    }
    CHECK(sim::iau(rows, 1e-3) == doctest::Approx(20.0 / std::numbers::pi).epsilon(1e-4));
  }
  SUBCASE("scaling in the command") {
    const auto a = constant_error_series(0.0, 0.7, 1e-3, 2.0);
    const auto b = constant_error_series(0.0, 1.4, 1e-3, 2.0);
    CHECK(sim::iau(b, 1e-3) == doctest::Approx(2.0 * sim::iau(a, 1e-3)).epsilon(1e-12));
  }
}

TEST_CASE("scenario validation") {
  SUBCASE("substeps") {
    Scenario sc = short_scenario();
    CHECK(sc.substeps() == 20);
    sc.h_plant = sc.h_ctrl;
    CHECK(sc.substeps() == 1);
    sc.h_plant = 3e-4;
    CHECK_THROWS_AS(sc.substeps(), ValidationError);
    try {
      sc.substeps();
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.field() == "sim.h_plant");
    }
    sc.h_plant = 2e-3;  // coarser than the control step
    CHECK_THROWS_AS(sc.substeps(), ValidationError);
  }
  SUBCASE("trajectory must cover the horizon") {
    Scenario sc = short_scenario();
    sc.T = 5.0;
    try {
      sc.validate();
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.field() == "trajectory");
      CHECK(std::string(e.what()).find("too short") != std::string::npos);
    }
  }
  SUBCASE("trajectory must sit on the control grid") {
    // Finer than the control grid, so the sample count is sufficient and the
    // spacing mismatch is what trips.
    Scenario sc = short_scenario();
    sc.traj = short_traj(5e-4);
    try {
      sc.validate();
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("control step") != std::string::npos);
    }
  }
  SUBCASE("horizon must be a whole number of control steps") {
    Scenario sc = short_scenario();
    sc.T = 1.0005;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
  }
  SUBCASE("negative noise rejected") {
    Scenario sc = short_scenario();
    sc.noise.theta_std = -1.0;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
  }
}

TEST_CASE("closed loop at rest stays at rest") {
  Scenario sc = short_scenario();
  for (auto& v : sc.traj.theta_ref) v = 0.0;
  for (auto& v : sc.traj.dtheta_ref) v = 0.0;
  for (auto& v : sc.traj.ddtheta_ref) v = 0.0;
  sc.controller.ppi = control::PPIGains{};
  const auto rr = sim::run(sc);
  REQUIRE_FALSE(rr.diverged);
  REQUIRE(rr.series.size() == 1201);
  for (const auto& r : rr.series) {
    REQUIRE(r.theta_l == 0.0);
    REQUIRE(r.u2 == 0.0);
  }
  CHECK(rr.itae == 0.0);
  CHECK(rr.iau == 0.0);
  CHECK(rr.j == 0.0);
  CHECK(rr.t_fail == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("run produces a complete series and a consistent objective") {
  Scenario sc = short_scenario();
  const auto rr = sim::run(sc);
  REQUIRE_FALSE(rr.diverged);
  REQUIRE(rr.series.size() == 1201);
  for (std::size_t k = 0; k < rr.series.size(); ++k) {
    REQUIRE(rr.series[k].t == static_cast<double>(k) * sc.h_ctrl);
    REQUIRE(rr.series[k].theta_ref == sc.traj.theta_ref[k]);
  }
  CHECK(rr.itae > 0.0);
  CHECK(rr.iau > 0.0);
  CHECK(rr.j == rr.itae + sc.w_u * rr.iau);

  // The cascade actually tracks: terminal error well under a milliradian.
  CHECK(std::abs(rr.series.back().theta_l - 0.3) < 1e-3);

  // Metrics recomputed from the recorded series match the returned ones.
  CHECK(sim::itae(rr.series, sc.h_ctrl) == rr.itae);
  CHECK(sim::iau(rr.series, sc.h_ctrl) == rr.iau);

  // Skipping the series changes nothing about the metrics.
  const auto bare = sim::run(sc, false);
  CHECK(bare.series.empty());
  CHECK(bare.itae == rr.itae);
  CHECK(bare.iau == rr.iau);
}

TEST_CASE("runs are deterministic, also under measurement noise") {
  Scenario sc = short_scenario();
  sc.noise.theta_std = 1e-5;
  sc.noise.omega_std = 1e-4;
  sc.seed = 1;
  const auto a = sim::run(sc);
  const auto b = sim::run(sc);
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t k = 0; k < a.series.size(); ++k) {
    REQUIRE(a.series[k].theta_l == b.series[k].theta_l);
    REQUIRE(a.series[k].u2 == b.series[k].u2);
  }
  CHECK(a.itae == b.itae);

  sc.seed = 2;
  const auto c = sim::run(sc);
  CHECK(c.itae != a.itae);

  // And the noise actually perturbs the loop relative to the clean run.
  sc.noise.theta_std = 0.0;
  sc.noise.omega_std = 0.0;
  const auto clean = sim::run(sc);
  CHECK(clean.itae != a.itae);
}

TEST_CASE("divergence is caught, truncated and flagged") {
  Scenario sc;
  sc.traj = trajectory::benchmark_trajectory(1e-3);
  sc.controller.i_max = 1e12;
  sc.controller.ppi.Kp_i = 1e6;
  const auto rr = sim::run(sc);
  REQUIRE(rr.diverged);
  CHECK(rr.t_fail > 0.0);
  CHECK(rr.t_fail < 0.05);
  CHECK(rr.series.size() == rr.diverged_step + 1);
  CHECK(rr.series.back().t == rr.t_fail);
  CHECK(std::isfinite(rr.itae));

  const auto bare = sim::run(sc, false);
  CHECK(bare.diverged);
  CHECK(bare.t_fail == rr.t_fail);
  CHECK(bare.itae == rr.itae);
  CHECK(bare.series.empty());
}

TEST_CASE("halving both steps barely moves the benchmark metric") {
  Scenario coarse;
  coarse.traj = trajectory::benchmark_trajectory(1e-3);
  const auto a = sim::run(coarse, false);

  Scenario fine;
  fine.h_ctrl = 5e-4;
  fine.h_plant = 2.5e-5;
  fine.traj = trajectory::benchmark_trajectory(5e-4);
  const auto b = sim::run(fine, false);

  REQUIRE_FALSE(a.diverged);
  REQUIRE_FALSE(b.diverged);
  CHECK(std::abs(a.itae - b.itae) / a.itae < 2e-2);
}

TEST_CASE("series and metrics writers produce the documented shapes") {
  const auto rows = constant_error_series(1e-3, 0.25, 0.5, 1.0);
  std::ostringstream os;
  sim::write_series_csv(rows, os);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,theta_ref,theta_l,omega_m,omega_l,u1,u2,f_hat_outer,f_hat_inner,saturated\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + three rows

  RunResult rr;
  rr.itae = 0.5;
  rr.iau = 2.0;
  rr.j = 0.5 + 1e-6 * 2.0;
  std::ostringstream js;
  sim::write_metrics_json(rr, 1e-6, js);
  const std::string json = js.str();
  CHECK(json.find("\"itae\": 0.5") != std::string::npos);
  CHECK(json.find("\"iau\": 2") != std::string::npos);
  CHECK(json.find("\"diverged\": false") != std::string::npos);
}
