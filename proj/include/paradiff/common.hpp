#pragma once

// Shared scalar types, constants and the error taxonomy. Everything in this
// library lives in namespace paradiff and computes in double precision.

#include <complex>
#include <stdexcept>
#include <string>

namespace paradiff {

using cd = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double sqrt_two_pi = 2.506628274631000502415765284811;

// <j> = sqrt(1 + j^2)
inline double bracket(double j) { return std::sqrt(1.0 + j * j); }

// Failure modes required by the module contracts. Each gets its own type so
// callers can react structurally instead of parsing messages; the numeric
// payloads carry the quantities the contracts ask to report.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct size_error : error {
  using error::error;
};

// violated numeric precondition, e.g. a nonzero mean where zero is required
struct precondition_error : error {
  double value = 0.0;
  precondition_error(const std::string& msg, double v) : error(msg), value(v) {}
};

struct parameter_error : error {
  using error::error;
};

// input not of the admitted structural form
struct structure_error : error {
  using error::error;
};

// ellipticity or positivity margin violated; carries the worst margin and
// the grid location where it is attained
struct margin_error : error {
  double margin = 0.0;
  double location = 0.0;
  margin_error(const std::string& msg, double m, double x)
      : error(msg), margin(m), location(x) {}
};

// iteration failed to converge; carries the last residual or increment
struct convergence_error : error {
  double residual = 0.0;
  convergence_error(const std::string& msg, double r) : error(msg), residual(r) {}
};

// requested computation needs data the input does not carry
struct capability_error : error {
  using error::error;
};

struct config_error : error {
  using error::error;
};

}  // namespace paradiff
