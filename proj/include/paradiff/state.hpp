#pragma once

// The doubled unknown U = (u+, u-) and the linear part of the equation.
//
// The scalar problem is written as i u_t + u_xx + P*u + f = 0, equivalently
// u_t = i(u_xx + P*u + f). Doubling couples u+ = u with u- which on the
// reality subspace equals conj(u+). The convolution potential acts per mode
// through lambda_j = (ij)^2 + phat(j); the minus component carries the
// reflected multiplier lambda_{-j}.

#include <map>
#include <vector>

#include "common.hpp"
#include "field.hpp"

namespace paradiff {

struct PotentialSpec {
  std::map<int, double> coeffs;  // phat(j), finitely many nonzero
  bool symmetric_flag = false;

  double at(int j) const {
    auto it = coeffs.find(j);
    return it == coeffs.end() ? 0.0 : it->second;
  }

  void validate() const {
    if (!symmetric_flag) return;
    for (const auto& [j, v] : coeffs)
      if (at(-j) != v)
        throw parameter_error("potential marked symmetric but phat(" +
                              std::to_string(j) + ") != phat(" +
                              std::to_string(-j) + ")");
  }
};

inline double lambda_mode(int j, const PotentialSpec& p) {
  return -(double)j * (double)j + p.at(j);
}

struct DoubledState {
  SpectralField plus, minus;

  int n() const { return plus.n(); }
  const PeriodicGrid& grid() const { return plus.grid; }
};

inline DoubledState zero_state(const PeriodicGrid& g) {
  return {SpectralField::zero(g), SpectralField::zero(g)};
}

// pair u with its conjugate so the state lies on the reality subspace
inline DoubledState make_doubled(const SpectralField& u) {
  return {u, conj_field(u)};
}

inline DoubledState operator+(const DoubledState& a, const DoubledState& b) {
  return {a.plus + b.plus, a.minus + b.minus};
}

inline DoubledState operator-(const DoubledState& a, const DoubledState& b) {
  return {a.plus - b.plus, a.minus - b.minus};
}

inline DoubledState operator*(cd c, const DoubledState& s) {
  return {c * s.plus, c * s.minus};
}

// iE = diag(i, -i)
inline DoubledState apply_iE(const DoubledState& s) {
  return {cd(0.0, 1.0) * s.plus, cd(0.0, -1.0) * s.minus};
}

inline DoubledState apply_lambda(const DoubledState& s,
                                 const PotentialSpec& pot) {
  DoubledState r = s;
  const auto& g = s.plus.grid;
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
    r.plus.at(j) = lambda_mode(j, pot) * s.plus.at(j);
    r.minus.at(j) = lambda_mode(-j, pot) * s.minus.at(j);
  }
  return r;
}

inline double state_norm_hs(const DoubledState& s, double index) {
  double p = sobolev_norm(s.plus, index);
  double m = sobolev_norm(s.minus, index);
  return std::sqrt(p * p + m * m);
}

enum class Subspace { reality, parity };

struct SubspaceReport {
  bool ok = true;
  double max_violation = 0.0;
};

// reality: uhat-(j) = conj(uhat+(-j)) for every stored mode (Nyquist is its
// own partner). parity: uhat(j) = uhat(-j) componentwise.
inline SubspaceReport check_subspace(const DoubledState& s, Subspace which,
                                     double tol = 1e-10) {
  const auto& g = s.plus.grid;
  double worst = 0.0;
  if (which == Subspace::reality) {
    for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
      double v = std::abs(s.minus.at(j) - std::conj(s.plus.at(g.reflect(j))));
      worst = std::max(worst, v);
    }
  } else {
    for (int j = 1; j <= g.mode_hi(); ++j) {
      worst = std::max(worst, std::abs(s.plus.at(j) - s.plus.at(-j)));
      worst = std::max(worst, std::abs(s.minus.at(j) - s.minus.at(-j)));
    }
  }
  return {worst <= tol, worst};
}

}  // namespace paradiff
