#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vgswarm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle into [-pi, pi).
inline double normalize_angle(double a) {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("normalize_angle: non-finite angle");
  }
  if (a >= -kPi && a < kPi) return a;
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - kPi;
}

// Wraps an angle into [0, 2pi).
inline double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

/// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ExpansionError : public Error {
 public:
  enum class Reason { UndefinedExpansion, NegativeDepth };
  ExpansionError(Reason reason, const std::string& what)
      : Error(what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class PatternUnavailable : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace vgswarm
