#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dtmfc/common.hpp"

namespace dtmfc::control {

/// Classical cascade gains: outer position P, inner speed PI. The defaults
/// represent a tight commissioning on a healthy machine, so they perform
/// well near the nominal resonance and degrade sharply once wear moves the
/// resonance down into the loop bandwidth.
struct PPIGains {
  double Kp_o = 80.0;               // 1/s
  double Kp_i = 9.0;                // A s / rad
  double Ki_i = 700.0;              // A / rad
  double integrator_limit = 10.0;   // anti-windup clamp on the integral state, A

  void validate() const;
};

/// Model-free cascade gains: intelligent proportional loops on position and
/// motor speed, each with its own control-effectiveness scale alpha.
struct IPGains {
  double alpha1 = 12.0;
  double alpha2 = 110.0;
  double Kp_o_star = 80.0;  // 1/s
  double Kp_i_star = 60.0;  // 1/s
  // Derivative window length in samples. The two-sample default reduces the
  // fitted slope to a backward difference, which keeps the incremental loops
  // free of window lag; longer windows trade bandwidth for noise smoothing.
  int N_d = 2;

  void validate() const;
};

/// Feedforward configuration shared by both cascades. The kinematic terms
/// add the reference speed to the outer output and the inertial current to
/// the inner output. The model-based term shapes the speed reference with an
/// anticipatory resonance filter built from (ff_f1, ff_D1).
struct FFConfig {
  bool kinematic_outer = true;
  bool kinematic_inner = true;
  bool model_based = false;
  double ff_f1 = 55.0;  // Hz
  double ff_D1 = 0.13;

  void validate() const;
};

/// Slope of the least-squares first-degree fit to uniformly spaced samples.
/// Requires at least two samples; two reduce to a backward difference.
double least_squares_slope(std::span<const double> y, double h);

/// Ring buffer tracking the most recent `window` samples and their fitted
/// slope. Used for every online derivative in the model-free loops.
class SlopeEstimator {
 public:
  SlopeEstimator(int window, double h);

  void push(double y);
  bool ready() const { return fill_ == static_cast<int>(buf_.size()); }  // window full
  int fill() const { return fill_; }

  /// Slope over the currently held samples (at least two required).
  double slope() const;

  void reset();

 private:
  std::vector<double> buf_;
  int fill_ = 0;
  int next_ = 0;
  double h_ = 0.0;
};

/// Intelligent-proportional control: proportional action on the tracking
/// error plus compensation of the estimated lumped dynamics, normalized by
/// the control effectiveness so a matched loop obeys de/dt + kp*e = 0.
double ip_law(double e, double dy_ref, double f_hat, double kp, double alpha);

/// Online estimate of the lumped term F of the ultra-local model
/// dy/dt = F + alpha*u: fitted output slope minus alpha times the control
/// applied over the previous step. Not ready until the window is full.
class UltraLocalEstimator {
 public:
  UltraLocalEstimator(int window, double h, double alpha);

  struct Result {
    double f_hat = 0.0;
    bool ready = false;
  };

  Result update(double y, double u_prev);
  void reset();

 private:
  SlopeEstimator slope_;
  double alpha_ = 0.0;
};

/// Anticipatory resonance filter for the speed reference: the proper
/// inverse of the believed motor-to-load transfer, i.e. the locked-inertia
/// resonant pair in the numerator over the load-path zero padded with a
/// fixed realization pole, discretized by the bilinear transform. Its dc
/// gain equals 1 + inertia_ratio; cascaded with the load transfer it
/// reduces the resonant pair to a first-order lag.
class ModelFF {
 public:
  /// Realization pole in rad/s. A drive-side constant shared by every
  /// parameterization of the filter, chosen above the plausible resonance
  /// band so the inversion stays accurate where the plant actually rings.
  static constexpr double kRealizationPole = 1250.0;

  ModelFF(double ff_f1, double ff_D1, double inertia_ratio, double h_ctrl);

  double step(double x);
  double dc_gain() const { return dc_; }
  void reset();

 private:
  std::array<double, 3> b_{};
  std::array<double, 3> a_{};  // a_[0] == 1
  double s1_ = 0.0;
  double s2_ = 0.0;
  double dc_ = 1.0;
};

/// Filter an entire reference speed series through ModelFF from zero state.
std::vector<double> model_ff_series(std::span<const double> omega_ref, double ff_f1, double ff_D1,
                                    double inertia_ratio, double h_ctrl);

struct CascadeRefs {
  double theta = 0.0;    // rad
  double dtheta = 0.0;   // rad/s
  double ddtheta = 0.0;  // rad/s^2
};

struct CascadeOut {
  double u1 = 0.0;           // motor speed reference, rad/s
  double u2 = 0.0;           // current command after the drive limit, A
  double f_hat_outer = 0.0;  // zero for the classical cascade
  double f_hat_inner = 0.0;
  bool saturated = false;
};

/// P position / PI speed cascade with optional kinematic and model-based
/// feedforward. The speed integral uses the rectangle rule with an
/// anti-windup clamp; the final current is clamped at the drive limit.
class PpiCascade {
 public:
  PpiCascade(const PPIGains& gains, const FFConfig& ff, double h_ctrl, double inertia_over_kt,
             double inertia_ratio, double i_max);

  CascadeOut step(double theta_l, double omega_m, const CascadeRefs& refs);
  double integrator() const { return integ_; }
  void reset();

 private:
  PPIGains g_;
  FFConfig ff_;
  double h_ = 0.0;
  double iok_ = 0.0;  // (Jm + Jl) / Kt
  double i_max_ = 0.0;
  double integ_ = 0.0;
  std::optional<ModelFF> ff_filter_;
};

/// Model-free iP position / iP speed cascade. Both loops estimate their
/// lumped dynamics online from the fitted output slope and the previously
/// applied feedback component. Each loop's reference derivative is taken
/// from the same fitted-slope estimator applied to its reference history,
/// so the reference and measurement sides accumulate identically and the
/// incremental law telescopes without a one-sided sampling bias. Kinematic
/// feedforward enters additively with the analytic derivatives; the
/// optional anticipatory filter shapes the speed reference (renormalized
/// to unity dc gain so the speed scale is preserved). During the warm-up
/// window each loop falls back to plain proportional action.
class IpIpCascade {
 public:
  IpIpCascade(const IPGains& gains, const FFConfig& ff, double h_ctrl, double inertia_over_kt,
              double inertia_ratio, double i_max);

  CascadeOut step(double theta_l, double omega_m, const CascadeRefs& refs);
  void reset();

 private:
  IPGains g_;
  FFConfig ff_;
  double h_ = 0.0;
  double iok_ = 0.0;
  double i_max_ = 0.0;
  UltraLocalEstimator est_outer_;
  UltraLocalEstimator est_inner_;
  SlopeEstimator ref_outer_slope_;
  SlopeEstimator ref_inner_slope_;
  double prev_phi1_ = 0.0;
  double prev_phi2_ = 0.0;
  std::optional<ModelFF> ff_filter_;
};

}  // namespace dtmfc::control
