#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dtmfc {

/// Rejected user input (parameter, scenario key, file content). `field` names
/// the offending entry so CLI errors can point at it.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Plant state left the finite envelope. `step` is the plant step index at
/// which the check failed.
class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(std::size_t step, const std::string& message)
      : std::runtime_error(message), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Gain search ended without producing any usable objective value.
class OptimizationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that round-trips to the same double. "nan"/"inf"
/// for non-finite values.
std::string format_double(double v);

/// Strict full-token parse of a decimal double. Throws ValidationError
/// (field "number") on trailing garbage or empty input.
double parse_double(std::string_view s);

/// Composite trapezoidal rule over uniformly spaced samples.
double trapezoid(const std::vector<double>& y, double h);

/// SplitMix64 mixing step, used to derive independent per-draw seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dtmfc
