#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtmfc/control.hpp"

#include <cmath>
#include <random>
#include <span>
#include <vector>

using namespace dtmfc::control;
using dtmfc::ValidationError;

namespace {

// Control step used throughout unless a test needs an exactly representable
// one for bit-level oracles.
constexpr double kH = 1e-3;

IPGains ip_gains(double a1, double a2, double kpo, double kpi, int nd = 2) {
  IPGains g;
  g.alpha1 = a1;
  g.alpha2 = a2;
  g.Kp_o_star = kpo;
  g.Kp_i_star = kpi;
  g.N_d = nd;
  return g;
}

PPIGains ppi_gains(double kpo, double kpi, double ki, double limit = 10.0) {
  PPIGains g;
  g.Kp_o = kpo;
  g.Kp_i = kpi;
  g.Ki_i = ki;
  g.integrator_limit = limit;
  return g;
}

FFConfig ff_config(bool kin_outer, bool kin_inner, bool model = false) {
  FFConfig ff;
  ff.kinematic_outer = kin_outer;
  ff.kinematic_inner = kin_inner;
  ff.model_based = model;
  return ff;
}

}  // namespace

TEST_CASE("least-squares slope of a constant series is exactly zero") {
  for (std::size_t n : {2u, 5u, 21u}) {
    CAPTURE(n);
    std::vector<double> y(n, 2.5);
    CHECK(least_squares_slope(y, kH) == 0.0);
  }
}

TEST_CASE("least-squares slope recovers a linear ramp") {
  SUBCASE("two samples reduce to a backward difference") {
    const std::vector<double> y{1.0, 1.5};
    CHECK(least_squares_slope(y, 0.5) == 1.0);
  }
  SUBCASE("longer dyadic ramps are exact") {
    for (std::size_t n : {5u, 21u}) {
      CAPTURE(n);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = 3.0 * static_cast<double>(i) * 0.125;
      CHECK(least_squares_slope(y, 0.125) == 3.0);
    }
  }
}

TEST_CASE("least-squares slope of a quadratic is the derivative at the window center") {
  // y = t^2 over t = 6..10 ms: the fit slope is 2 * mean(t) = 0.016.
  std::vector<double> y(5);
  for (int i = 0; i < 5; ++i) {
    const double t = (6.0 + i) * 1e-3;
    y[static_cast<std::size_t>(i)] = t * t;
  }
  CHECK(least_squares_slope(y, kH) == doctest::Approx(0.016).epsilon(1e-10));
}

TEST_CASE("slope estimator tracks the most recent window") {
  SlopeEstimator est(5, 0.5);
  const std::vector<double> v{0.0, 1.0, -0.5, 2.0, 4.0, 3.5, 6.25};
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(est.ready() == (i >= 5));
    est.push(v[i]);
    CHECK(est.fill() == static_cast<int>(std::min<std::size_t>(i + 1, 5)));
  }
  const std::vector<double> last5(v.end() - 5, v.end());
  CHECK(est.slope() == least_squares_slope(last5, 0.5));

  est.reset();
  CHECK(est.fill() == 0);
  CHECK_FALSE(est.ready());

  // Partially filled: the slope uses only the samples held so far.
  est.push(1.0);
  est.push(2.5);
  CHECK(est.slope() == least_squares_slope(std::vector<double>{1.0, 2.5}, 0.5));
}

TEST_CASE("slope estimator rejects bad parameters") {
  CHECK_THROWS_AS(SlopeEstimator(1, kH), ValidationError);
  CHECK_THROWS_AS(SlopeEstimator(22, kH), ValidationError);
  CHECK_THROWS_AS(SlopeEstimator(5, 0.0), ValidationError);
  CHECK_THROWS_AS(SlopeEstimator(5, -1e-3), ValidationError);
  CHECK_NOTHROW(SlopeEstimator(2, kH));
  CHECK_NOTHROW(SlopeEstimator(21, kH));
}

TEST_CASE("ultra-local estimator warms up, then separates slope and control") {
  UltraLocalEstimator est(3, kH, 2.0);
  auto r = est.update(1.0, 0.0);
  CHECK_FALSE(r.ready);
  r = est.update(1.0, 0.0);
  CHECK_FALSE(r.ready);
  r = est.update(1.0, 0.0);
  CHECK(r.ready);
  CHECK(r.f_hat == 0.0);  // constant output, no control

  // Constant output with unit control applied: the lumped term must absorb
  // -alpha * u.
  r = est.update(1.0, 1.0);
  CHECK(r.f_hat == -2.0);
}

TEST_CASE("ultra-local estimator on a quadratic output") {
  UltraLocalEstimator est(5, kH, 2.0);
  UltraLocalEstimator::Result r;
  for (int i = 6; i <= 10; ++i) {
    const double t = static_cast<double>(i) * 1e-3;
    r = est.update(t * t, 1.0);
  }
  CHECK(r.ready);
  CHECK(r.f_hat == doctest::Approx(-1.984).epsilon(1e-10));
}

TEST_CASE("ultra-local estimator recovers the lumped term of a matched scalar plant") {
  // dy/dt = F + alpha*u sampled by forward Euler gives an exactly linear
  // output for constant u, so the fitted slope is F + alpha*u and the
  // estimate returns F to rounding error, whatever the window.
  const double F = 0.7;
  const double alpha = 1.5;
  const double u = 0.3;
  for (int window : {2, 5}) {
    CAPTURE(window);
    UltraLocalEstimator est(window, kH, alpha);
    double y = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto r = est.update(y, u);
      if (k >= window) CHECK(r.f_hat == doctest::Approx(F).epsilon(1e-9));
      y += kH * (F + alpha * u);
    }
  }
}

TEST_CASE("intelligent-proportional law") {
  SUBCASE("worked value") { CHECK(ip_law(0.1, 0.5, 0.2, 10.0, 2.0) == 0.65); }
  SUBCASE("compensation cancels a matched reference slope") {
    CHECK(ip_law(0.0, 0.7, 0.7, 5.0, 3.0) == 0.0);
  }
  SUBCASE("affine coefficients") {
    // Unit probes expose the per-input gains: kp/alpha on the error, 1/alpha
    // on the reference slope, -1/alpha on the lumped estimate.
    CHECK(ip_law(1.0, 0.0, 0.0, 6.0, 4.0) == 1.5);
    CHECK(ip_law(0.0, 1.0, 0.0, 6.0, 4.0) == 0.25);
    CHECK(ip_law(0.0, 0.0, 1.0, 6.0, 4.0) == -0.25);
  }
  SUBCASE("superposition") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      const double e = dist(rng), d = dist(rng), f = dist(rng);
      const double whole = ip_law(e, d, f, 6.0, 4.0);
      const double parts = ip_law(e, 0.0, 0.0, 6.0, 4.0) + ip_law(0.0, d, 0.0, 6.0, 4.0) +
                           ip_law(0.0, 0.0, f, 6.0, 4.0);
      CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
    }
  }
}

TEST_CASE("matched loop decays at the commanded rate for any control effectiveness") {
  // With a perfect lumped estimate the closed scalar loop obeys
  // de/dt = -kp*e independently of alpha; alpha only rescales u internally.
  const double kp = 20.0;
  const double F = 0.7;
  const double h = 1e-5;
  const int n = 25000;  // 0.25 s
  std::vector<double> finals;
  for (double alpha : {0.5, 50.0}) {
    double y = 1.0;
    for (int k = 0; k < n; ++k) {
      const double u = ip_law(0.0 - y, 0.0, F, kp, alpha);
      y += h * (F + alpha * u);
    }
    finals.push_back(y);
  }
  for (double y : finals) {
    CHECK(std::abs(y) < 0.01);
    CHECK(y == doctest::Approx(std::exp(-5.0)).epsilon(1e-3));
  }
  CHECK(finals[0] == doctest::Approx(finals[1]).epsilon(1e-9));
}

TEST_CASE("ppi cascade at rest produces no command") {
  PpiCascade c(ppi_gains(80.0, 9.0, 700.0), ff_config(true, true), kH, 0.4, 1.0, 20.0);
  for (int k = 0; k < 3; ++k) {
    const auto out = c.step(0.0, 0.0, {});
    CHECK(out.u1 == 0.0);
    CHECK(out.u2 == 0.0);
    CHECK_FALSE(out.saturated);
  }
  CHECK(c.integrator() == 0.0);
}

TEST_CASE("ppi outer loop sums kinematic feedforward and proportional action") {
  PpiCascade c(ppi_gains(10.0, 9.0, 700.0), ff_config(true, true), kH, 0.4, 1.0, 20.0);
  CascadeRefs refs;
  refs.theta = 0.1;
  refs.dtheta = 0.6;
  const auto out = c.step(0.05, 0.0, refs);
  CHECK(out.u1 == doctest::Approx(1.1).epsilon(1e-15));

  PpiCascade no_kin(ppi_gains(10.0, 9.0, 700.0), ff_config(false, false), kH, 0.4, 1.0, 20.0);
  const auto out2 = no_kin.step(0.05, 0.0, refs);
  CHECK(out2.u1 == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("ppi speed integral accumulates rectangle sums exactly") {
  // Dyadic step and gains keep every operation exact: each step adds
  // 128 * 0.25 * 2^-10 = 0.03125 to the integral state.
  const double h = 0.0009765625;
  PpiCascade c(ppi_gains(0.0, 2.0, 128.0), ff_config(false, false), h, 0.0, 1.0, 20.0);
  CascadeOut out;
  for (int k = 0; k < 10; ++k) out = c.step(0.0, -0.25, {});
  CHECK(c.integrator() == 0.3125);
  CHECK(out.u2 == 0.8125);
  CHECK_FALSE(out.saturated);

  c.reset();
  CHECK(c.integrator() == 0.0);
  out = c.step(0.0, 0.0, {});
  CHECK(out.u2 == 0.0);
}

TEST_CASE("ppi integrator clamps at the anti-windup limit and unwinds freely") {
  const double h = 0.0009765625;
  PpiCascade c(ppi_gains(0.0, 2.0, 128.0, 0.1), ff_config(false, false), h, 0.0, 1.0, 20.0);
  for (int k = 0; k < 4; ++k) c.step(0.0, -0.25, {});
  CHECK(c.integrator() == 0.1);  // 0.125 clamped
  for (int k = 0; k < 6; ++k) c.step(0.0, -0.25, {});
  CHECK(c.integrator() == 0.1);  // held at the limit, not wound further
  c.step(0.0, 0.25, {});
  CHECK(c.integrator() == doctest::Approx(0.1 - 0.03125).epsilon(1e-15));
}

TEST_CASE("ppi output is clamped at the drive limit") {
  PpiCascade c(ppi_gains(0.0, 2.0, 0.0), ff_config(false, false), kH, 0.0, 1.0, 0.25);
  auto out = c.step(0.0, -10.0, {});
  CHECK(out.u2 == 0.25);
  CHECK(out.saturated);
  out = c.step(0.0, 10.0, {});
  CHECK(out.u2 == -0.25);
  CHECK(out.saturated);
}

TEST_CASE("ppi inner kinematic feedforward scales the acceleration reference") {
  CascadeRefs refs;
  refs.ddtheta = 4.0;
  PpiCascade with(ppi_gains(0.0, 0.0, 0.0), ff_config(true, true), kH, 0.5, 1.0, 20.0);
  PpiCascade without(ppi_gains(0.0, 0.0, 0.0), ff_config(true, false), kH, 0.5, 1.0, 20.0);
  const double d = with.step(0.0, 0.0, refs).u2 - without.step(0.0, 0.0, refs).u2;
  CHECK(d == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("ppi model feedforward injection has no dc component") {
  // With a constant speed reference the injected correction decays to zero,
  // so the steady command matches the plain cascade; the transient does not.
  CascadeRefs refs;
  refs.dtheta = 1.0;
  PpiCascade plain(ppi_gains(0.0, 1.0, 0.0), ff_config(true, false), kH, 0.0, 1.0, 20.0);
  PpiCascade shaped(ppi_gains(0.0, 1.0, 0.0), ff_config(true, false, true), kH, 0.0, 1.0, 20.0);
  double u2_plain = 0.0, u2_shaped = 0.0;
  bool transient_differs = false;
  for (int k = 0; k < 5000; ++k) {
    u2_plain = plain.step(0.0, 0.0, refs).u2;
    u2_shaped = shaped.step(0.0, 0.0, refs).u2;
    if (k < 50 && std::abs(u2_shaped - u2_plain) > 1e-3) transient_differs = true;
  }
  CHECK(u2_plain == 1.0);
  CHECK(transient_differs);
  CHECK(u2_shaped == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ipip warm-up acts as a plain proportional loop") {
  IpIpCascade c(ip_gains(2.0, 110.0, 10.0, 60.0), ff_config(false, false), kH, 0.4, 1.0, 20.0);
  CascadeRefs refs;
  refs.theta = 0.1;
  const auto out = c.step(0.0, 0.0, refs);
  CHECK(out.u1 == 0.5);  // Kp* e / alpha1 before the estimator window fills
  CHECK(out.f_hat_outer == 0.0);
}

TEST_CASE("ipip outer loop compensates the estimated lumped drift") {
  // Reference pinned at zero while the load angle falls by 0.4 mrad in one
  // step: the fitted slope is -0.4 rad/s and with zero proportional gain the
  // commanded speed is exactly the negated estimate.
  IpIpCascade c(ip_gains(1.0, 5.0, 0.0, 0.0), ff_config(false, false), kH, 0.0, 1.0, 20.0);
  auto out = c.step(0.0, 0.0, {});
  CHECK(out.u1 == 0.0);
  out = c.step(-0.0004, 0.0, {});
  CHECK(out.u1 == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.f_hat_outer == doctest::Approx(-0.4).epsilon(1e-12));
}

TEST_CASE("ipip with huge alpha degenerates to pure kinematic feedforward") {
  IpIpCascade c(ip_gains(1e9, 1e9, 80.0, 60.0), ff_config(true, true), kH, 0.4, 1.0, 20.0);
  CascadeRefs refs;
  refs.dtheta = 1.5;
  refs.ddtheta = -2.0;
  for (int k = 0; k < 10; ++k) {
    refs.theta = 0.2 + 0.01 * k;
    const auto out = c.step(0.1, 3.0, refs);
    CHECK(out.u1 == doctest::Approx(1.5).epsilon(1e-5));
    CHECK(out.u2 == doctest::Approx(0.4 * -2.0).epsilon(1e-5));
  }
}

TEST_CASE("ipip saturation feeds the realized command back to the estimator") {
  IpIpCascade c(ip_gains(1.0, 1.0, 0.0, 100.0), ff_config(false, false), kH, 0.0, 1.0, 0.5);
  auto out = c.step(0.0, -1.0, {});
  CHECK(out.u2 == 0.5);
  CHECK(out.saturated);
  out = c.step(0.0, -1.0, {});
  CHECK(out.u2 == 0.5);
  CHECK(out.saturated);
  // The inner estimate reflects the clamped 0.5 A that reached the plant,
  // not the raw 100 A demand: f = slope - alpha * u_prev = 0 - 0.5.
  CHECK(out.f_hat_inner == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("cascade steps are deterministic and reset restores the initial state") {
  const auto run = [](auto& cascade, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> u2;
    for (int k = 0; k < 200; ++k) {
      CascadeRefs refs{dist(rng), dist(rng), dist(rng)};
      u2.push_back(cascade.step(dist(rng), dist(rng), refs).u2);
    }
    return u2;
  };

  SUBCASE("ppi") {
    PpiCascade a(ppi_gains(80.0, 9.0, 700.0), ff_config(true, true, true), kH, 0.4, 1.0, 20.0);
    PpiCascade b(ppi_gains(80.0, 9.0, 700.0), ff_config(true, true, true), kH, 0.4, 1.0, 20.0);
    const auto ua = run(a, 99);
    const auto ub = run(b, 99);
    CHECK(ua == ub);
    a.reset();
    CHECK(run(a, 99) == ua);
  }
  SUBCASE("ipip") {
    IpIpCascade a(ip_gains(12.0, 110.0, 80.0, 60.0), ff_config(true, true, true), kH, 0.4, 1.0,
                  20.0);
    IpIpCascade b(ip_gains(12.0, 110.0, 80.0, 60.0), ff_config(true, true, true), kH, 0.4, 1.0,
                  20.0);
    const auto ua = run(a, 99);
    const auto ub = run(b, 99);
    CHECK(ua == ub);
    a.reset();
    CHECK(run(a, 99) == ua);
  }
}

TEST_CASE("model feedforward dc gain follows the inertia ratio") {
  CHECK(ModelFF(55.0, 0.13, 1.0, kH).dc_gain() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ModelFF(55.0, 0.13, 0.5, kH).dc_gain() == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("model feedforward step response settles at the dc gain") {
  ModelFF f(55.0, 0.13, 1.0, kH);
  double y = 0.0;
  for (int k = 0; k < 5000; ++k) y = f.step(1.0);
  CHECK(y == doctest::Approx(f.dc_gain()).epsilon(1e-9));
}

TEST_CASE("model feedforward is linear and the series helper matches stepping") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(100);
  for (auto& v : x) v = dist(rng);

  const auto series = model_ff_series(x, 55.0, 0.13, 1.0, kH);
  REQUIRE(series.size() == x.size());
  ModelFF f(55.0, 0.13, 1.0, kH);
  ModelFF g(55.0, 0.13, 1.0, kH);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double yk = f.step(x[k]);
    REQUIRE(yk == series[k]);
    CHECK(g.step(2.0 * x[k]) == doctest::Approx(2.0 * yk).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("model feedforward rejects invalid parameters") {
  CHECK_THROWS_AS(ModelFF(0.0, 0.13, 1.0, kH), ValidationError);
  CHECK_THROWS_AS(ModelFF(55.0, 0.0, 1.0, kH), ValidationError);
  CHECK_THROWS_AS(ModelFF(55.0, 1.0, 1.0, kH), ValidationError);
  CHECK_THROWS_AS(ModelFF(55.0, 0.13, 0.0, kH), ValidationError);
  CHECK_THROWS_AS(ModelFF(55.0, 0.13, 1.0, 0.0), ValidationError);
}

TEST_CASE("gain structures enforce their invariants") {
  SUBCASE("ppi") {
    CHECK_NOTHROW(ppi_gains(0.0, 0.0, 0.0).validate());  // zero gains are legal
    CHECK_THROWS_AS(ppi_gains(-1.0, 9.0, 700.0).validate(), ValidationError);
    CHECK_THROWS_AS(ppi_gains(80.0, -1.0, 700.0).validate(), ValidationError);
    CHECK_THROWS_AS(ppi_gains(80.0, 9.0, -1.0).validate(), ValidationError);
    CHECK_THROWS_AS(ppi_gains(80.0, 9.0, 700.0, 0.0).validate(), ValidationError);
  }
  SUBCASE("ipip") {
    CHECK_NOTHROW(ip_gains(12.0, 110.0, 0.0, 0.0).validate());
    CHECK_NOTHROW(ip_gains(-12.0, 110.0, 80.0, 60.0).validate());  // sign free, only nonzero
    CHECK_THROWS_AS(ip_gains(0.0, 110.0, 80.0, 60.0).validate(), ValidationError);
    CHECK_THROWS_AS(ip_gains(12.0, 0.0, 80.0, 60.0).validate(), ValidationError);
    CHECK_THROWS_AS(ip_gains(12.0, 110.0, -1.0, 60.0).validate(), ValidationError);
    CHECK_THROWS_AS(ip_gains(12.0, 110.0, 80.0, -1.0).validate(), ValidationError);
    CHECK_THROWS_AS(ip_gains(12.0, 110.0, 80.0, 60.0, 1).validate(), ValidationError);
    CHECK_THROWS_AS(ip_gains(12.0, 110.0, 80.0, 60.0, 22).validate(), ValidationError);
    CHECK_NOTHROW(ip_gains(12.0, 110.0, 80.0, 60.0, 21).validate());
  }
  SUBCASE("feedforward") {
    FFConfig ff = ff_config(true, true, true);
    ff.ff_f1 = 0.0;
    CHECK_THROWS_AS(ff.validate(), ValidationError);
    ff.ff_f1 = 55.0;
    ff.ff_D1 = 1.0;
    CHECK_THROWS_AS(ff.validate(), ValidationError);
  }
}
