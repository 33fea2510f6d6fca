#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "dtmfc/common.hpp"

namespace dtmfc::plant {

/// Wear state of the mechanics: first resonance frequency f1 (Hz) and its
/// damping ratio D1. Both drift as the machine ages, f1 downward and D1
/// across its band, so they are the free axes of the robustness study.
struct WearParams {
  double f1 = 55.0;
  double D1 = 0.13;
};

/// In-service wear domain. Strict validation enforces it; the Monte Carlo
/// sampler intentionally does not, so distribution tails stay in play.
inline constexpr double kF1Min = 30.0;
inline constexpr double kF1Max = 70.0;
inline constexpr double kD1Min = 0.08;
inline constexpr double kD1Max = 0.15;

/// Current-to-torque subsystem: algebraic torque constant, or a pure
/// integrator as printed in some drive-train derivations.
enum class TorqueMode { kStatic, kIntegrator };

/// Denominator damping term of the motor-to-load speed coupling. kAsPrinted
/// uses 2*D1*w02 (mixed frequencies), kSymmetric uses 2*D1*w01.
enum class CsDenominator { kAsPrinted, kSymmetric };

struct PlantParams {
  WearParams wear{};
  double Jm = 1.25e-2;           // motor-side inertia, kg m^2
  double Jl = 1.25e-2;           // load-side inertia, kg m^2
  double Kt = 1.0;               // torque constant, N m / A
  double Fc = 0.05;              // Coulomb friction level, N m
  double Fv = 5e-4;              // viscous friction coefficient, N m s / rad
  double backlash_width = 1e-3;  // total gear play at the load, rad
  double sgn_epsilon = 1e-3;     // width of the regularized sign, rad/s
  TorqueMode a_s_mode = TorqueMode::kStatic;
  CsDenominator cs_denominator = CsDenominator::kAsPrinted;

  /// Throws ValidationError on non-physical values. Wear outside the
  /// in-service domain throws when `strict_wear` is set and otherwise
  /// appends a warning line.
  void validate(bool strict_wear = true, std::vector<std::string>* warnings = nullptr) const;
};

/// Quantities derived from the independent parameters. w02 and D2 follow
/// from the inertia ratio; the shaft stiffness and damping are the physical
/// interpretation of the same resonance.
struct DerivedParams {
  double w01 = 0.0;      // 2*pi*f1, rad/s
  double w02 = 0.0;      // w01*sqrt(1 + Jl/Jm), rad/s
  double D2 = 0.0;       // sqrt((Jm+Jl)/Jm)*D1
  double K_shaft = 0.0;  // Jl*w01^2, N m / rad
  double B_shaft = 0.0;  // 2*D1*K_shaft/w02, N m s / rad
};

DerivedParams derive_params(const PlantParams& p);

/// Friction expressed as an equivalent current: (Fc*sgn(w) + Fv*w)/Kt with
/// sgn regularized as tanh(w/sgn_epsilon).
double friction_current(double omega_l, const PlantParams& p);

/// State of the symmetric play (dead-band) operator.
struct PlayState {
  double output = 0.0;
  double offset = 0.0;  // input - output, kept within +-width/2
};

/// One update of the play operator: the output is dragged along only once
/// the input reaches the edge of the band, so it stalls on every reversal
/// until width worth of travel is used up. Rate independent; width 0 is the
/// identity map.
double play_step(double theta_in, double width, PlayState& state);

struct PlantOutputs {
  double omega_m = 0.0;  // motor speed, rad/s
  double omega_l = 0.0;  // load-side speed before the gear play, rad/s
  double theta_l = 0.0;  // load angle behind the gear play, rad
};

struct PlantState {
  Eigen::Vector3d x_b = Eigen::Vector3d::Zero();  // torque -> motor speed block
  Eigen::Vector2d x_c = Eigen::Vector2d::Zero();  // motor speed -> load speed block
  double torque_state = 0.0;                      // integrator torque mode only
  double theta_m = 0.0;
  double theta_pre = 0.0;  // load angle before the play operator
  double theta_l = 0.0;
  double backlash_offset = 0.0;
  double last_if = 0.0;  // friction current used in the most recent step, A
};

/// Fixed-step simulator of the two-mass drive train.
///
/// The continuous blocks are realized in controllable canonical form and
/// discretized exactly under a zero-order hold (matrix exponential of the
/// augmented system), so the only approximations in the loop are the
/// trapezoidal angle integration, the regularized sign and the one-step lag
/// on the friction feedback.
class PlantStepper {
 public:
  PlantStepper(const PlantParams& p, double h_plant, bool strict_wear = true);

  /// Advance one plant step of length h_plant with the commanded current
  /// held constant over the step. Returns the outputs at the new sample.
  PlantOutputs step(double i_cmd);

  /// Outputs at the current sample without advancing.
  PlantOutputs outputs() const;

  /// Torque transmitted through the shaft coupling, reconstructed from the
  /// stiffness/damping interpretation of the resonance. Diagnostic only.
  double shaft_torque() const;

  void reset();

  const PlantState& state() const { return state_; }
  const PlantParams& params() const { return params_; }
  const DerivedParams& derived() const { return derived_; }
  double h_plant() const { return h_; }
  std::size_t step_count() const { return step_count_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Realization matrices, exposed so tests can check poles and gains.
  const Eigen::Matrix3d& A_b() const { return A_b_; }
  const Eigen::Matrix3d& Ad_b() const { return Ad_b_; }
  const Eigen::Vector3d& Bd_b() const { return Bd_b_; }
  const Eigen::Vector3d& C_b() const { return c_b_; }
  const Eigen::Matrix2d& A_c() const { return A_c_; }
  const Eigen::Matrix2d& Ad_c() const { return Ad_c_; }
  const Eigen::Vector2d& Bd_c() const { return Bd_c_; }
  const Eigen::Vector2d& C_c() const { return c_c_; }

 private:
  void check_finite() const;

  PlantParams params_;
  DerivedParams derived_;
  double h_ = 0.0;
  std::size_t step_count_ = 0;
  std::vector<std::string> warnings_;
  PlantState state_;

  Eigen::Matrix3d A_b_ = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d Ad_b_ = Eigen::Matrix3d::Zero();
  Eigen::Vector3d B_b_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d Bd_b_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d c_b_ = Eigen::Vector3d::Zero();
  Eigen::Matrix2d A_c_ = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d Ad_c_ = Eigen::Matrix2d::Zero();
  Eigen::Vector2d B_c_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d Bd_c_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d c_c_ = Eigen::Vector2d::Zero();
};

}  // namespace dtmfc::plant
