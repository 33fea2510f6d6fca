#include "dtmfc/control.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

namespace dtmfc::control {

void PPIGains::validate() const {
  if (Kp_o < 0.0) throw ValidationError("controller.ppi.Kp_o", "outer gain must be non-negative");
  if (Kp_i < 0.0) throw ValidationError("controller.ppi.Kp_i", "inner gain must be non-negative");
  if (Ki_i < 0.0) throw ValidationError("controller.ppi.Ki_i", "integral gain must be non-negative");
  if (!(integrator_limit > 0.0)) {
    throw ValidationError("controller.ppi.integrator_limit", "anti-windup limit must be positive");
  }
}

void IPGains::validate() const {
  if (alpha1 == 0.0) throw ValidationError("controller.ipip.alpha1", "alpha1 must be nonzero");
  if (alpha2 == 0.0) throw ValidationError("controller.ipip.alpha2", "alpha2 must be nonzero");
  if (Kp_o_star < 0.0) {
    throw ValidationError("controller.ipip.Kp_o_star", "outer gain must be non-negative");
  }
  if (Kp_i_star < 0.0) {
    throw ValidationError("controller.ipip.Kp_i_star", "inner gain must be non-negative");
  }
  if (N_d < 2 || N_d > 21) {
    throw ValidationError("controller.ipip.N_d", "derivative window must lie in [2, 21]");
  }
}

void FFConfig::validate() const {
  if (!model_based) return;
  if (!(ff_f1 > 0.0)) throw ValidationError("controller.ff.ff_f1", "filter frequency must be positive");
  if (!(ff_D1 > 0.0 && ff_D1 < 1.0)) {
    throw ValidationError("controller.ff.ff_D1", "filter damping must lie in (0, 1)");
  }
}

double least_squares_slope(std::span<const double> y, double h) {
  const auto n = static_cast<int>(y.size());
  assert(n >= 2);
  const double mid = 0.5 * static_cast<double>(n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += (static_cast<double>(i) - mid) * y[static_cast<std::size_t>(i)];
  const double nn = static_cast<double>(n);
  return acc * 12.0 / (h * nn * (nn * nn - 1.0));
}

SlopeEstimator::SlopeEstimator(int window, double h) : buf_(static_cast<std::size_t>(window)), h_(h) {
  if (window < 2 || window > 21) {
    throw ValidationError("controller.ipip.N_d", "derivative window must lie in [2, 21]");
  }
  if (!(h > 0.0)) throw ValidationError("sim.h_ctrl", "sample spacing must be positive");
}

void SlopeEstimator::push(double y) {
  buf_[static_cast<std::size_t>(next_)] = y;
  next_ = (next_ + 1) % static_cast<int>(buf_.size());
  fill_ = std::min(fill_ + 1, static_cast<int>(buf_.size()));
}

double SlopeEstimator::slope() const {
  assert(fill_ >= 2);
  std::array<double, 21> ordered{};
  const int n = static_cast<int>(buf_.size());
  // Oldest first: walk the ring starting behind the write cursor.
  int idx = (fill_ == n) ? next_ : 0;
  for (int i = 0; i < fill_; ++i) {
    ordered[static_cast<std::size_t>(i)] = buf_[static_cast<std::size_t>(idx)];
    idx = (idx + 1) % n;
  }
  return least_squares_slope(std::span<const double>(ordered.data(), static_cast<std::size_t>(fill_)), h_);
}

void SlopeEstimator::reset() {
  fill_ = 0;
  next_ = 0;
}

double ip_law(double e, double dy_ref, double f_hat, double kp, double alpha) {
  return (kp * e + dy_ref - f_hat) / alpha;
}

UltraLocalEstimator::UltraLocalEstimator(int window, double h, double alpha)
    : slope_(window, h), alpha_(alpha) {}

UltraLocalEstimator::Result UltraLocalEstimator::update(double y, double u_prev) {
  slope_.push(y);
  if (!slope_.ready()) return {0.0, false};
  return {slope_.slope() - alpha_ * u_prev, true};
}

void UltraLocalEstimator::reset() { slope_.reset(); }

ModelFF::ModelFF(double ff_f1, double ff_D1, double inertia_ratio, double h_ctrl) {
  if (!(ff_f1 > 0.0)) throw ValidationError("controller.ff.ff_f1", "filter frequency must be positive");
  if (!(ff_D1 > 0.0 && ff_D1 < 1.0)) {
    throw ValidationError("controller.ff.ff_D1", "filter damping must lie in (0, 1)");
  }
  if (!(inertia_ratio > 0.0)) throw ValidationError("plant.Jl", "inertia ratio must be positive");
  if (!(h_ctrl > 0.0)) throw ValidationError("sim.h_ctrl", "control step must be positive");

  const double w01 = 2.0 * std::numbers::pi * ff_f1;
  const double w02 = w01 * std::sqrt(1.0 + inertia_ratio);
  const double D2 = std::sqrt(1.0 + inertia_ratio) * ff_D1;
  // Numerator: the load-path pole pair to be cancelled. Denominator: the
  // load-path zero (2 D1 w01 s + w01^2) times a fixed realization pole that
  // makes the inverse proper. The pole is a drive constant, not a function of
  // the believed wear parameters: tying it to ff_f1 would make the closed
  // loop sensitive to the belief through the pole's lag alone, which is
  // exactly what the compensator is supposed to avoid. Cascaded with the
  // load transfer this collapses the resonant pair into a first-order lag.
  const double b0 = w02 * w02;
  const double b1 = 2.0 * D2 * w02;
  const double b2 = 1.0;
  const double wp = kRealizationPole;
  const double a0 = w01 * w01;
  const double a1 = 2.0 * ff_D1 * w01 + w01 * w01 / wp;
  const double a2 = 2.0 * ff_D1 * w01 / wp;

  // Bilinear transform, s = K (z-1)/(z+1) with K = 2/h.
  const double K = 2.0 / h_ctrl;
  const double K2 = K * K;
  const double den = a2 * K2 + a1 * K + a0;
  b_[0] = (b2 * K2 + b1 * K + b0) / den;
  b_[1] = (2.0 * b0 - 2.0 * b2 * K2) / den;
  b_[2] = (b2 * K2 - b1 * K + b0) / den;
  a_[0] = 1.0;
  a_[1] = (2.0 * a0 - 2.0 * a2 * K2) / den;
  a_[2] = (a2 * K2 - a1 * K + a0) / den;
  dc_ = b0 / a0;  // = 1 + inertia_ratio
}

double ModelFF::step(double x) {
  // Direct form II transposed.
  const double y = b_[0] * x + s1_;
  s1_ = b_[1] * x - a_[1] * y + s2_;
  s2_ = b_[2] * x - a_[2] * y;
  return y;
}

void ModelFF::reset() {
  s1_ = 0.0;
  s2_ = 0.0;
}

std::vector<double> model_ff_series(std::span<const double> omega_ref, double ff_f1, double ff_D1,
                                    double inertia_ratio, double h_ctrl) {
  ModelFF filt(ff_f1, ff_D1, inertia_ratio, h_ctrl);
  std::vector<double> out;
  out.reserve(omega_ref.size());
  for (double x : omega_ref) out.push_back(filt.step(x));
  return out;
}

PpiCascade::PpiCascade(const PPIGains& gains, const FFConfig& ff, double h_ctrl,
                       double inertia_over_kt, double inertia_ratio, double i_max)
    : g_(gains), ff_(ff), h_(h_ctrl), iok_(inertia_over_kt), i_max_(i_max) {
  g_.validate();
  ff_.validate();
  if (!(h_ctrl > 0.0)) throw ValidationError("sim.h_ctrl", "control step must be positive");
  if (!(i_max > 0.0)) throw ValidationError("controller.i_max", "drive limit must be positive");
  if (ff_.model_based) ff_filter_.emplace(ff_.ff_f1, ff_.ff_D1, inertia_ratio, h_ctrl);
}

CascadeOut PpiCascade::step(double theta_l, double omega_m, const CascadeRefs& refs) {
  CascadeOut out;
  const double e_pos = refs.theta - theta_l;
  const double u1 = (ff_.kinematic_outer ? refs.dtheta : 0.0) + g_.Kp_o * e_pos;

  double wm_ref = u1;
  // Anticipatory term: the difference between the shaped and the rigid
  // reference speed, so only the resonance pre-compensation is injected and
  // the dc speed scale is untouched.
  if (ff_filter_) wm_ref += ff_filter_->step(refs.dtheta) / ff_filter_->dc_gain() - refs.dtheta;

  const double e_m = wm_ref - omega_m;
  integ_ = std::clamp(integ_ + g_.Ki_i * e_m * h_, -g_.integrator_limit, g_.integrator_limit);
  const double u2 = (ff_.kinematic_inner ? iok_ * refs.ddtheta : 0.0) + g_.Kp_i * e_m + integ_;

  out.u1 = u1;
  out.u2 = std::clamp(u2, -i_max_, i_max_);
  out.saturated = out.u2 != u2;
  return out;
}

void PpiCascade::reset() {
  integ_ = 0.0;
  if (ff_filter_) ff_filter_->reset();
}

IpIpCascade::IpIpCascade(const IPGains& gains, const FFConfig& ff, double h_ctrl,
                         double inertia_over_kt, double inertia_ratio, double i_max)
    : g_(gains),
      ff_(ff),
      h_(h_ctrl),
      iok_(inertia_over_kt),
      i_max_(i_max),
      est_outer_(gains.N_d, h_ctrl, gains.alpha1),
      est_inner_(gains.N_d, h_ctrl, gains.alpha2),
      ref_outer_slope_(gains.N_d, h_ctrl),
      ref_inner_slope_(gains.N_d, h_ctrl) {
  g_.validate();
  ff_.validate();
  if (!(h_ctrl > 0.0)) throw ValidationError("sim.h_ctrl", "control step must be positive");
  if (!(i_max > 0.0)) throw ValidationError("controller.i_max", "drive limit must be positive");
  if (ff_.model_based) ff_filter_.emplace(ff_.ff_f1, ff_.ff_D1, inertia_ratio, h_ctrl);
}

CascadeOut IpIpCascade::step(double theta_l, double omega_m, const CascadeRefs& refs) {
  CascadeOut out;

  // Outer loop: iP on the load angle; the estimator sees the feedback part
  // applied one step ago, not the full speed reference, so steady
  // feedforward does not get counted twice. The reference derivative is the
  // fitted slope of the reference history, matching the measurement side of
  // the lumped estimate sample for sample.
  const auto fo = est_outer_.update(theta_l, prev_phi1_);
  ref_outer_slope_.push(refs.theta);
  const double e_pos = refs.theta - theta_l;
  double phi1 = 0.0;
  if (fo.ready) {
    phi1 = ip_law(e_pos, ref_outer_slope_.slope(), fo.f_hat, g_.Kp_o_star, g_.alpha1);
    out.f_hat_outer = fo.f_hat;
  } else {
    phi1 = g_.Kp_o_star * e_pos / g_.alpha1;  // warm-up: proportional only
  }
  prev_phi1_ = phi1;
  const double u1 = (ff_.kinematic_outer ? refs.dtheta : 0.0) + phi1;

  double wm_ref = u1;
  // Anticipatory term, same zero-dc injection as in the classical cascade.
  if (ff_filter_) wm_ref += ff_filter_->step(refs.dtheta) / ff_filter_->dc_gain() - refs.dtheta;

  // Inner loop: iP on the motor speed. The speed-reference derivative comes
  // from the same fitted-slope estimator applied to the wm_ref history.
  ref_inner_slope_.push(wm_ref);
  const double dwm_ref = ref_inner_slope_.ready() ? ref_inner_slope_.slope() : 0.0;
  const auto fi = est_inner_.update(omega_m, prev_phi2_);
  const double e_m = wm_ref - omega_m;
  double phi2 = 0.0;
  if (fi.ready) {
    phi2 = ip_law(e_m, dwm_ref, fi.f_hat, g_.Kp_i_star, g_.alpha2);
    out.f_hat_inner = fi.f_hat;
  } else {
    phi2 = g_.Kp_i_star * e_m / g_.alpha2;
  }

  const double u2 = (ff_.kinematic_inner ? iok_ * refs.ddtheta : 0.0) + phi2;
  const double u2_sat = std::clamp(u2, -i_max_, i_max_);
  // The estimator memory keeps the share of phi2 that actually reached the
  // plant, so saturation does not corrupt the lumped-dynamics estimate.
  prev_phi2_ = phi2 - (u2 - u2_sat);

  out.u1 = u1;
  out.u2 = u2_sat;
  out.saturated = u2_sat != u2;
  return out;
}

void IpIpCascade::reset() {
  est_outer_.reset();
  est_inner_.reset();
  ref_outer_slope_.reset();
  ref_inner_slope_.reset();
  prev_phi1_ = 0.0;
  prev_phi2_ = 0.0;
  if (ff_filter_) ff_filter_->reset();
}

}  // namespace dtmfc::control
