#include "dtmfc/plant.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dtmfc::plant {

namespace {

// Exact zero-order-hold discretization via the exponential of the augmented
// matrix [[A, B], [0, 0]] * h.
template <int N>
void discretize_zoh(const Eigen::Matrix<double, N, N>& A, const Eigen::Matrix<double, N, 1>& B,
                    double h, Eigen::Matrix<double, N, N>& Ad, Eigen::Matrix<double, N, 1>& Bd) {
  Eigen::Matrix<double, N + 1, N + 1> aug = Eigen::Matrix<double, N + 1, N + 1>::Zero();
  aug.template topLeftCorner<N, N>() = A;
  aug.template topRightCorner<N, 1>() = B;
  const Eigen::Matrix<double, N + 1, N + 1> E = (aug * h).exp();
  Ad = E.template topLeftCorner<N, N>();
  Bd = E.template topRightCorner<N, 1>();
}

}  // namespace

void PlantParams::validate(bool strict_wear, std::vector<std::string>* warnings) const {
  if (!(Jm > 0.0)) throw ValidationError("plant.Jm", "motor inertia must be positive");
  if (!(Jl > 0.0)) throw ValidationError("plant.Jl", "load inertia must be positive");
  if (!(Kt > 0.0)) throw ValidationError("plant.Kt", "torque constant must be positive");
  if (Fc < 0.0) throw ValidationError("plant.Fc", "Coulomb friction must be non-negative");
  if (Fv < 0.0) throw ValidationError("plant.Fv", "viscous friction must be non-negative");
  if (backlash_width < 0.0) {
    throw ValidationError("plant.backlash_width", "backlash width must be non-negative");
  }
  if (!(sgn_epsilon > 0.0)) {
    throw ValidationError("plant.sgn_epsilon", "sign regularization width must be positive");
  }
  if (!(wear.f1 > 0.0)) throw ValidationError("plant.f1", "resonance frequency must be positive");
  if (!(wear.D1 > 0.0 && wear.D1 < 1.0)) {
    throw ValidationError("plant.D1", "damping ratio must lie in (0, 1)");
  }
  const bool inside = wear.f1 >= kF1Min && wear.f1 <= kF1Max && wear.D1 >= kD1Min && wear.D1 <= kD1Max;
  if (!inside) {
    if (strict_wear) {
      throw ValidationError("plant.wear", "wear parameters outside the in-service domain (f1 in [30, 70] Hz, D1 in [0.08, 0.15])");
    }
    if (warnings != nullptr) {
      warnings->push_back("wear parameters outside the in-service domain: f1=" + format_double(wear.f1) +
                          " Hz, D1=" + format_double(wear.D1));
    }
  }
}

DerivedParams derive_params(const PlantParams& p) {
  if (!(p.Jm > 0.0)) throw ValidationError("plant.Jm", "motor inertia must be positive");
  if (!(p.Jl > 0.0)) throw ValidationError("plant.Jl", "load inertia must be positive");
  DerivedParams d;
  d.w01 = 2.0 * std::numbers::pi * p.wear.f1;
  d.w02 = d.w01 * std::sqrt(1.0 + p.Jl / p.Jm);
  d.D2 = std::sqrt((p.Jm + p.Jl) / p.Jm) * p.wear.D1;
  d.K_shaft = p.Jl * d.w01 * d.w01;
  d.B_shaft = 2.0 * p.wear.D1 * d.K_shaft / d.w02;
  return d;
}

double friction_current(double omega_l, const PlantParams& p) {
  const double sgn = std::tanh(omega_l / p.sgn_epsilon);
  return (p.Fc * sgn + p.Fv * omega_l) / p.Kt;
}

double play_step(double theta_in, double width, PlayState& state) {
  const double half = 0.5 * width;
  state.output = std::clamp(state.output, theta_in - half, theta_in + half);
  state.offset = theta_in - state.output;
  return state.output;
}

PlantStepper::PlantStepper(const PlantParams& p, double h_plant, bool strict_wear)
    : params_(p), h_(h_plant) {
  params_.validate(strict_wear, &warnings_);
  if (!(h_plant > 0.0)) throw ValidationError("sim.h_plant", "plant step must be positive");
  derived_ = derive_params(params_);
  if (h_plant > 1.0 / (10.0 * params_.wear.f1)) {
    warnings_.push_back("h_plant=" + format_double(h_plant) +
                        " s under-resolves the f1 resonance (want h <= 1/(10 f1))");
  }

  const double w01 = derived_.w01;
  const double w02 = derived_.w02;
  const double D1 = params_.wear.D1;
  const double D2 = derived_.D2;

  // Torque -> motor speed: zeros at the shaft resonance (w01, D1), poles at
  // the locked-inertia resonance (w02, D2), 1/(Jm s) roll-off.
  A_b_ << 0.0, 1.0, 0.0,
      0.0, 0.0, 1.0,
      0.0, -w02 * w02, -2.0 * D2 * w02;
  B_b_ << 0.0, 0.0, 1.0;
  c_b_ << w01 * w01 / params_.Jm, 2.0 * D1 * w01 / params_.Jm, 1.0 / params_.Jm;

  // Motor speed -> load speed: second order, unity dc gain.
  const double c1 = 2.0 * D1 * (params_.cs_denominator == CsDenominator::kAsPrinted ? w02 : w01);
  A_c_ << 0.0, 1.0,
      -w01 * w01, -c1;
  B_c_ << 0.0, 1.0;
  c_c_ << w01 * w01, 2.0 * D1 * w01;

  discretize_zoh<3>(A_b_, B_b_, h_, Ad_b_, Bd_b_);
  discretize_zoh<2>(A_c_, B_c_, h_, Ad_c_, Bd_c_);
}

PlantOutputs PlantStepper::outputs() const {
  return {c_b_.dot(state_.x_b), c_c_.dot(state_.x_c), state_.theta_l};
}

double PlantStepper::shaft_torque() const {
  // Twist and twist rate reconstructed from the speed difference across the
  // coupling; theta_pre already integrates the load-side speed.
  const double twist = state_.theta_m - state_.theta_pre;
  const double twist_rate = c_b_.dot(state_.x_b) - c_c_.dot(state_.x_c);
  return derived_.K_shaft * twist + derived_.B_shaft * twist_rate;
}

void PlantStepper::reset() {
  state_ = PlantState{};
  step_count_ = 0;
}

PlantOutputs PlantStepper::step(double i_cmd) {
  if (!std::isfinite(i_cmd)) {
    throw SimulationDiverged(step_count_, "non-finite current command at plant step " +
                                              std::to_string(step_count_));
  }

  const double omega_m_prev = c_b_.dot(state_.x_b);
  const double omega_l_prev = c_c_.dot(state_.x_c);

  // Friction is fed back from the speed at the start of the step (one-step
  // lag keeps the loop explicit).
  state_.last_if = friction_current(omega_l_prev, params_);
  const double i_r = i_cmd - state_.last_if;

  double torque = 0.0;
  if (params_.a_s_mode == TorqueMode::kStatic) {
    torque = params_.Kt * i_r;
  } else {
    torque = state_.torque_state;
    state_.torque_state += h_ * (params_.Kt / params_.Jm) * i_r;
  }

  state_.x_b = Ad_b_ * state_.x_b + Bd_b_ * torque;
  const double omega_m = c_b_.dot(state_.x_b);

  state_.x_c = Ad_c_ * state_.x_c + Bd_c_ * omega_m;
  const double omega_l = c_c_.dot(state_.x_c);

  state_.theta_m += 0.5 * h_ * (omega_m_prev + omega_m);
  state_.theta_pre += 0.5 * h_ * (omega_l_prev + omega_l);

  PlayState play{state_.theta_l, state_.backlash_offset};
  state_.theta_l = play_step(state_.theta_pre, params_.backlash_width, play);
  state_.backlash_offset = play.offset;

  check_finite();
  ++step_count_;
  return {omega_m, omega_l, state_.theta_l};
}

void PlantStepper::check_finite() const {
  const double bound = 1e9;
  const bool bad = !state_.x_b.allFinite() || !state_.x_c.allFinite() ||
                   !std::isfinite(state_.theta_m) || !std::isfinite(state_.theta_pre) ||
                   !std::isfinite(state_.torque_state) ||
                   state_.x_b.cwiseAbs().maxCoeff() > bound ||
                   state_.x_c.cwiseAbs().maxCoeff() > bound ||
                   std::abs(state_.theta_m) > bound || std::abs(state_.theta_pre) > bound ||
                   std::abs(state_.torque_state) > bound;
  if (bad) {
    throw SimulationDiverged(step_count_, "plant state diverged at plant step " +
                                              std::to_string(step_count_));
  }
}

}  // namespace dtmfc::plant
