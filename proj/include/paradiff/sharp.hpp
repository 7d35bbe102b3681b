#pragma once

// Truncated asymptotic sharp product of Weyl symbols and exponentials of
// xi-independent matrix symbols.
//
// The Weyl composition expansion used here is
//
//   (a # b)_rho = sum_{l < rho} (1/l!) (-i/2)^l
//                 sum_{m=0..l} C(l,m) (-1)^m
//                 (d_xi^{l-m} d_x^m a) (d_x^{l-m} d_xi^m b),
//
// the Taylor expansion of the twisted mode convolution
// c_mu(xi) = sum_{m+m'=mu} a_m(xi + m'/2) b_{m'}(xi - m/2). x-derivatives act
// spectrally on coefficients, xi-derivatives analytically on monomials and by
// the stored centered differences on tables. For polynomial symbols of total
// degree <= 2 the expansion terminates at l = 2 and rho = 3 is exact.

#include <optional>
#include <vector>

#include "common.hpp"
#include "symbol.hpp"

namespace paradiff {

inline XiProfile multiply_profiles(const XiProfile& p, const XiProfile& q,
                                   double xi_max) {
  if (p.kind == XiProfile::Kind::monomial &&
      q.kind == XiProfile::Kind::monomial && p.k + q.k <= 2)
    return XiProfile::monomial(p.k + q.k);
  return XiProfile::table(
      xi_max, [&](double xi) { return p.eval(xi) * q.eval(xi); });
}

// d/dx of a term: spectral derivative of the coefficient
inline SymbolTerm x_derivative_term(const SymbolTerm& t) {
  return {spectral_derivative(t.coeff, 1), t.profile};
}

// d/dxi of a term; empty when it vanishes identically
inline std::optional<SymbolTerm> xi_derivative_term(const SymbolTerm& t) {
  if (t.profile.kind == XiProfile::Kind::monomial) {
    if (t.profile.k == 0) return std::nullopt;
    // d/dxi (i xi)^k = i k (i xi)^{k-1}; fold the scalar into the coefficient
    SymbolTerm r{cd(0.0, (double)t.profile.k) * t.coeff,
                 XiProfile::monomial(t.profile.k - 1)};
    return r;
  }
  XiProfile q = t.profile;
  q.values = t.profile.d1;
  q.finalize_table();
  return SymbolTerm{t.coeff, q};
}

inline std::optional<SymbolTerm> term_derivatives(const SymbolTerm& t, int dx,
                                                  int dxi) {
  SymbolTerm cur = t;
  for (int i = 0; i < dx; ++i) cur = x_derivative_term(cur);
  for (int i = 0; i < dxi; ++i) {
    auto next = xi_derivative_term(cur);
    if (!next) return std::nullopt;
    cur = *next;
  }
  return cur;
}

inline DiscreteSymbol sharp_product(const DiscreteSymbol& a,
                                    const DiscreteSymbol& b, int rho) {
  if (rho < 1 || rho > 3)
    throw parameter_error("sharp_product: rho must be 1, 2 or 3");
  if (a.grid != b.grid) throw size_error("sharp_product: grid mismatch");

  const double binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  const double factorial[3] = {1, 1, 2};

  DiscreteSymbol out = zero_symbol(a.grid, a.order + b.order);
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      for (int l = 0; l < rho; ++l) {
        cd base = std::pow(cd(0.0, -0.5), l) / factorial[l];
        for (int m = 0; m <= l; ++m) {
          auto A = term_derivatives(ta, m, l - m);
          auto B = term_derivatives(tb, l - m, m);
          if (!A || !B) continue;
          cd c = base * binom[l][m] * ((m % 2) ? -1.0 : 1.0);
          SpectralField coeff =
              c * pointwise_multiply(A->coeff, B->coeff);
          if (max_abs_coeff(coeff) == 0.0) continue;
          out.terms.push_back(
              {coeff, multiply_profiles(A->profile, B->profile, a.grid.n)});
        }
      }
    }
  }
  return out;
}

namespace detail {

// sinh(w)/w, series near zero
inline double sinhc(double w) {
  if (std::abs(w) < 1e-4) {
    double w2 = w * w;
    return 1.0 + w2 / 6.0 + w2 * w2 / 120.0;
  }
  return std::sinh(w) / w;
}

inline bool all_function_terms(const DiscreteSymbol& s) {
  for (const auto& t : s.terms)
    if (t.profile.kind != XiProfile::Kind::monomial || t.profile.k != 0)
      return false;
  return true;
}

// collapse a k = 0 symbol to a single coefficient field
inline SpectralField function_part(const DiscreteSymbol& s) {
  SpectralField acc = SpectralField::zero(s.grid);
  for (const auto& t : s.terms) acc = acc + t.coeff;
  return acc;
}

}  // namespace detail

// Exponential of a xi-independent matrix symbol. Two admitted shapes:
//   diagonal diag(s, conj s)     -> diag(e^s, e^{conj s})
//   antidiagonal (0, z; conj z, 0) -> (cosh|z|, z sinh|z|/|z|; completion),
// the latter with determinant identically one.
inline MatrixSymbol symbol_exp(const MatrixSymbol& m) {
  if (!detail::all_function_terms(m.a) || !detail::all_function_terms(m.b))
    throw structure_error(
        "symbol_exp: input must be a function symbol (order 0, k = 0)");
  const PeriodicGrid& g = m.a.terms.empty() ? m.b.grid : m.a.grid;
  bool diag_zero = symbol_is_zero(m.a, 1e-14);
  bool anti_zero = symbol_is_zero(m.b, 1e-14);

  if (anti_zero && !diag_zero) {
    SpectralField s = detail::function_part(m.a);
    MatrixSymbol out = zero_matrix_symbol(g);
    out.a = make_symbol(0.0, map_samples(s, [](cd v) { return std::exp(v); }),
                        XiProfile::monomial(0));
    return out;
  }
  if (diag_zero) {
    SpectralField z = detail::function_part(m.b);
    auto zs = z.samples();
    std::vector<cd> c1(zs.size()), c2(zs.size());
    for (size_t i = 0; i < zs.size(); ++i) {
      double w = std::abs(zs[i]);
      c1[i] = std::cosh(w);
      c2[i] = zs[i] * detail::sinhc(w);
    }
    MatrixSymbol out = zero_matrix_symbol(g);
    out.a = make_symbol(0.0, SpectralField::from_samples(g, c1),
                        XiProfile::monomial(0));
    out.b = make_symbol(0.0, SpectralField::from_samples(g, c2),
                        XiProfile::monomial(0));
    return out;
  }
  throw structure_error(
      "symbol_exp: input must be diagonal or antidiagonal, not mixed");
}

// negate a symbol termwise
inline DiscreteSymbol negate_symbol(const DiscreteSymbol& s) {
  DiscreteSymbol r = s;
  for (auto& t : r.terms) t.coeff = cd(-1.0) * t.coeff;
  return r;
}

inline MatrixSymbol negate_matrix_symbol(const MatrixSymbol& m) {
  return {negate_symbol(m.a), negate_symbol(m.b)};
}

}  // namespace paradiff
