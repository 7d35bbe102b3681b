#pragma once

// Discrete symbols a(x, xi) = sum_t coeff_t(x) * profile_t(xi).
//
// Profiles are either monomials (i xi)^k, k = 0..2, handled analytically, or
// tables over the half-integer grid xi = -n, -n+1/2, ..., n with stored
// centered-difference xi-derivatives up to order two. Coefficients are
// SpectralFields in x. The n-th symbol Fourier coefficient used by the
// quantizer is the plain Fourier-series coefficient of x -> a(x, xi), i.e.
// coeff.at(n)/sqrt(2pi) times the profile, which makes Op(1) the exact
// identity.
//
// A MatrixSymbol stores the first row (a, b) of a reality-preserving 2x2
// matrix; the second row is the completion (conj b(x,-xi), conj a(x,-xi)).

#include <functional>
#include <vector>

#include "common.hpp"
#include "cutoff.hpp"
#include "field.hpp"

namespace paradiff {

struct XiProfile {
  enum class Kind { monomial, table };

  Kind kind = Kind::monomial;
  int k = 0;           // monomial power, 0..2
  double xi_max = 0;   // table grid spans [-xi_max, xi_max], spacing 1/2
  std::vector<cd> values, d1, d2;

  static XiProfile monomial(int k) {
    if (k < 0 || k > 2)
      throw parameter_error("monomial profile power must be 0..2");
    XiProfile p;
    p.kind = Kind::monomial;
    p.k = k;
    return p;
  }

  static XiProfile table(double xi_max,
                         const std::function<cd(double)>& fn) {
    XiProfile p;
    p.kind = Kind::table;
    p.xi_max = xi_max;
    int size = (int)std::lround(4.0 * xi_max) + 1;
    p.values.resize(size);
    for (int i = 0; i < size; ++i) p.values[i] = fn(-xi_max + 0.5 * i);
    p.finalize_table();
    return p;
  }

  // centered differences with spacing 1/2, one-sided at the edges
  void finalize_table() {
    int size = (int)values.size();
    d1.assign(size, cd(0.0));
    d2.assign(size, cd(0.0));
    for (int i = 1; i + 1 < size; ++i) {
      d1[i] = values[i + 1] - values[i - 1];
      d2[i] = 4.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]);
    }
    if (size >= 2) {
      d1[0] = 2.0 * (values[1] - values[0]);
      d1[size - 1] = 2.0 * (values[size - 1] - values[size - 2]);
      d2[0] = d2[1 < size ? 1 : 0];
      d2[size - 1] = d2[size - 2 >= 0 ? size - 2 : size - 1];
    }
  }

  cd eval(double xi, int dxi = 0) const {
    if (kind == Kind::monomial) {
      if (dxi > k) return cd(0.0);
      double fall = 1.0;
      for (int d = 0; d < dxi; ++d) fall *= (double)(k - d);
      cd ipow = std::pow(cd(0.0, 1.0), dxi);
      return fall * ipow * std::pow(cd(0.0, xi), k - dxi);
    }
    int i = (int)std::lround(2.0 * (xi + xi_max));
    i = std::max(0, std::min((int)values.size() - 1, i));
    switch (dxi) {
      case 0: return values[i];
      case 1: return d1[i];
      case 2: return d2[i];
      default: throw parameter_error("table profile derivatives limited to order 2");
    }
  }
};

struct SymbolTerm {
  SpectralField coeff;
  XiProfile profile;
};

struct DiscreteSymbol {
  PeriodicGrid grid;
  double order = 0.0;
  std::vector<SymbolTerm> terms;
};

inline DiscreteSymbol zero_symbol(const PeriodicGrid& g, double order = 0.0) {
  DiscreteSymbol s;
  s.grid = g;
  s.order = order;
  return s;
}

inline DiscreteSymbol make_symbol(double order, const SpectralField& coeff,
                                  const XiProfile& profile) {
  DiscreteSymbol s;
  s.grid = coeff.grid;
  s.order = order;
  s.terms.push_back({coeff, profile});
  return s;
}

// constant-in-x symbol from a profile
inline DiscreteSymbol multiplier_symbol(const PeriodicGrid& g, double order,
                                        const XiProfile& profile) {
  auto one = SpectralField::zero(g);
  one.at(0) = sqrt_two_pi;
  return make_symbol(order, one, profile);
}

inline bool symbol_is_zero(const DiscreteSymbol& s, double tol = 0.0) {
  for (const auto& t : s.terms)
    if (max_abs_coeff(t.coeff) > tol) return false;
  return true;
}

// series coefficient a_m(xi): the m-th Fourier coefficient of x -> a(x, xi)
inline cd series_coeff(const DiscreteSymbol& s, int m, double xi) {
  cd acc(0.0);
  for (const auto& t : s.terms)
    acc += t.coeff.at(m) * t.profile.eval(xi);
  return acc / sqrt_two_pi;
}

// samples of x -> a(x, xi) on the grid nodes
inline std::vector<cd> eval_on_grid(const DiscreteSymbol& s, double xi) {
  std::vector<cd> acc(s.grid.n, cd(0.0));
  for (const auto& t : s.terms) {
    cd p = t.profile.eval(xi);
    auto cs = t.coeff.samples();
    for (int i = 0; i < s.grid.n; ++i) acc[i] += p * cs[i];
  }
  return acc;
}

// the check transform s~(x, xi) = conj(s(x, -xi)); monomial profiles are
// invariant under it (conj((i(-xi))^k) = (i xi)^k) so only coefficients
// conjugate, while tables reverse and conjugate
inline XiProfile conj_reflect_profile(const XiProfile& p) {
  if (p.kind == XiProfile::Kind::monomial) return p;
  XiProfile q = p;
  int size = (int)p.values.size();
  for (int i = 0; i < size; ++i) q.values[i] = std::conj(p.values[size - 1 - i]);
  q.finalize_table();
  return q;
}

inline DiscreteSymbol conj_reflect_symbol(const DiscreteSymbol& s) {
  DiscreteSymbol r = s;
  for (auto& t : r.terms) {
    t.coeff = conj_field(t.coeff);
    t.profile = conj_reflect_profile(t.profile);
  }
  return r;
}

// pointwise conjugate conj(a(x, xi)) for real xi; conj((i xi)^k) picks up
// (-1)^k, tables conjugate in place
inline DiscreteSymbol conj_symbol(const DiscreteSymbol& s) {
  DiscreteSymbol r = s;
  for (auto& t : r.terms) {
    t.coeff = conj_field(t.coeff);
    if (t.profile.kind == XiProfile::Kind::monomial) {
      if (t.profile.k % 2 == 1) t.coeff = cd(-1.0) * t.coeff;
    } else {
      for (auto& v : t.profile.values) v = std::conj(v);
      t.profile.finalize_table();
    }
  }
  return r;
}

struct MatrixSymbol {
  DiscreteSymbol a, b;
};

inline MatrixSymbol zero_matrix_symbol(const PeriodicGrid& g,
                                       double order = 0.0) {
  return {zero_symbol(g, order), zero_symbol(g, order)};
}

// a_chi: scale the m-th coefficient mode by chi(m, xi). The coupling of m and
// xi turns each x-mode pair {+m, -m} into its own term with a table profile.
inline DiscreteSymbol regularize(const DiscreteSymbol& s,
                                 const CutoffProfile& cutoff) {
  const auto& g = s.grid;
  DiscreteSymbol out = zero_symbol(g, s.order);
  for (const auto& t : s.terms) {
    for (int m = 0; m <= g.n / 2; ++m) {
      SpectralField part = SpectralField::zero(g);
      bool nonzero = false;
      for (int j : {m, -m}) {
        if (j < g.mode_lo() || j > g.mode_hi()) continue;
        part.at(j) = t.coeff.at(j);
        if (std::abs(t.coeff.at(j)) > 0.0) nonzero = true;
        if (j == 0 || j == g.mode_lo()) break;  // self-paired modes
      }
      if (!nonzero) continue;
      const XiProfile& p = t.profile;
      int mm = m;
      out.terms.push_back(
          {part, XiProfile::table(g.n, [&p, &cutoff, mm](double xi) {
             return cutoff.chi((double)mm, xi) * p.eval(xi);
           })});
    }
  }
  return out;
}

}  // namespace paradiff
