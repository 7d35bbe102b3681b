#pragma once

// Standard (sigma=1), Weyl (sigma=1/2) and Bony-Weyl quantizations as
// explicit Fourier double sums,
//
//   uhat_out(k) = sum_j a_{k-j}((1-sigma) k + sigma j) uhat(j),
//
// with a_m(xi) the plain series coefficient of x -> a(x,xi).  With the
// e^{ikx}/sqrt(2pi) field convention this makes Op_sigma(1) = Id exact.
// Bony-Weyl inserts the cutoff chi(k-j, (k+j)/2) and is the production
// path: rows are banded, |k-j| < delta(1+|k|)/(1-delta/2).

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "cutoff.hpp"
#include "field.hpp"
#include "state.hpp"
#include "symbol.hpp"

namespace paradiff {

// dense mode-space matrix, row k+n/2, column j+n/2 (diagnostics only)
using LinearOperatorMatrix = Eigen::MatrixXcd;

namespace detail {
inline void require_sigma(double sigma) {
  if (sigma != 0.0 && sigma != 0.5 && sigma != 1.0)
    throw parameter_error("quantization sigma must be 0, 1/2 or 1");
}
}  // namespace detail

inline SpectralField op_quantize(const DiscreteSymbol& sym, double sigma,
                                 const SpectralField& u) {
  detail::require_sigma(sigma);
  if (sym.grid != u.grid)
    throw size_error("symbol and field grids differ");
  const auto& g = u.grid;
  auto out = SpectralField::zero(g);
  for (int k = g.mode_lo(); k <= g.mode_hi(); ++k) {
    cd acc(0.0);
    for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
      int m = k - j;
      if (m < g.mode_lo() || m > g.mode_hi()) continue;
      double xi = (1.0 - sigma) * k + sigma * j;
      acc += series_coeff(sym, m, xi) * u.at(j);
    }
    out.at(k) = acc;
  }
  return out;
}

// b with Op^W(b) = Op(a): bhat(j, xi) = ahat(j, xi - j/2).  Monomials expand
// binomially into x-derivatives of the coefficient; tables translate on the
// half-integer grid (the shift j/2 is a whole number of nodes).
inline DiscreteSymbol weyl_from_standard(const DiscreteSymbol& sym) {
  DiscreteSymbol out = zero_symbol(sym.grid, sym.order);
  const auto& g = sym.grid;
  for (const auto& t : sym.terms) {
    if (t.profile.kind == XiProfile::Kind::monomial) {
      int kk = t.profile.k;
      double binom = 1.0;
      for (int m = 0; m <= kk; ++m) {
        cd factor = binom * std::pow(-0.5, m);
        auto c = spectral_derivative(t.coeff, m);
        out.terms.push_back({factor * c, XiProfile::monomial(kk - m)});
        binom = binom * (kk - m) / (m + 1);
      }
      continue;
    }
    // one translated table per x-mode carrying a nonzero coefficient
    for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
      cd cj = t.coeff.at(j);
      if (cj == cd(0.0)) continue;
      auto mode = SpectralField::zero(g);
      mode.at(j) = cj;
      XiProfile p = t.profile;
      int size = (int)p.values.size();
      for (int i = 0; i < size; ++i) {
        int src = std::max(0, std::min(size - 1, i - j));
        p.values[i] = t.profile.values[src];
      }
      p.finalize_table();
      out.terms.push_back({std::move(mode), std::move(p)});
    }
  }
  return out;
}

inline SpectralField op_bony_weyl(const DiscreteSymbol& sym,
                                  const CutoffProfile& cutoff,
                                  const SpectralField& u) {
  if (sym.grid != u.grid)
    throw size_error("symbol and field grids differ");
  const auto& g = u.grid;
  auto out = SpectralField::zero(g);
  double widen = cutoff.delta / (1.0 - 0.5 * cutoff.delta);
  for (int k = g.mode_lo(); k <= g.mode_hi(); ++k) {
    // chi(m, k - m/2) vanishes once |m| >= delta<k - m/2>
    int band = (int)std::ceil(widen * (1.0 + std::abs((double)k))) + 1;
    int jlo = std::max(g.mode_lo(), k - band);
    int jhi = std::min(g.mode_hi(), k + band);
    cd acc(0.0);
    for (int j = jlo; j <= jhi; ++j) {
      int m = k - j;
      double xi = 0.5 * (k + j);
      double c = cutoff.chi(m, xi);
      if (c == 0.0) continue;
      acc += c * series_coeff(sym, m, xi) * u.at(j);
    }
    out.at(k) = acc;
  }
  return out;
}

inline LinearOperatorMatrix dense_quantize(const DiscreteSymbol& sym,
                                           double sigma) {
  detail::require_sigma(sigma);
  const auto& g = sym.grid;
  LinearOperatorMatrix M = LinearOperatorMatrix::Zero(g.n, g.n);
  for (int k = g.mode_lo(); k <= g.mode_hi(); ++k)
    for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
      int m = k - j;
      if (m < g.mode_lo() || m > g.mode_hi()) continue;
      double xi = (1.0 - sigma) * k + sigma * j;
      M(g.index_of(k), g.index_of(j)) = series_coeff(sym, m, xi);
    }
  return M;
}

inline LinearOperatorMatrix dense_bony_weyl(const DiscreteSymbol& sym,
                                            const CutoffProfile& cutoff) {
  const auto& g = sym.grid;
  LinearOperatorMatrix M = LinearOperatorMatrix::Zero(g.n, g.n);
  for (int k = g.mode_lo(); k <= g.mode_hi(); ++k)
    for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
      int m = k - j;
      if (m < g.mode_lo() || m > g.mode_hi()) continue;
      double xi = 0.5 * (k + j);
      double c = cutoff.chi(m, xi);
      if (c == 0.0) continue;
      M(g.index_of(k), g.index_of(j)) = c * series_coeff(sym, m, xi);
    }
  return M;
}

// largest singular value by power iteration on M^H M, deterministic start
inline double operator_norm(const LinearOperatorMatrix& M, int iters = 200,
                            double rel_tol = 1e-12) {
  int n = (int)M.cols();
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(dist(rng), dist(rng));
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXcd w = M.adjoint() * (M * v);
    double nn = w.norm();
    if (nn == 0.0) return 0.0;
    double prev = lam;
    lam = nn;
    v = w / nn;
    if (it > 2 && std::abs(lam - prev) <= rel_tol * lam) break;
  }
  return std::sqrt(lam);
}

// || M(a)^H - M(conj a) || in operator norm, Bony-Weyl matrices
inline double adjoint_residual(const DiscreteSymbol& sym,
                               const CutoffProfile& cutoff) {
  auto M = dense_bony_weyl(sym, cutoff);
  auto Mc = dense_bony_weyl(conj_symbol(sym), cutoff);
  return operator_norm(M.adjoint() - Mc);
}

// || M(a)^H - M(a) ||, the self-adjointness defect
inline double self_adjoint_residual(const DiscreteSymbol& sym,
                                    const CutoffProfile& cutoff) {
  auto M = dense_bony_weyl(sym, cutoff);
  return operator_norm(LinearOperatorMatrix(M.adjoint() - M));
}

// four-block operator of a completed matrix symbol: row two is the check
// transform of row one, which preserves the reality subspace
inline DoubledState matrix_apply(const MatrixSymbol& A,
                                 const CutoffProfile& cutoff,
                                 const DoubledState& s) {
  auto a_check = conj_reflect_symbol(A.a);
  auto b_check = conj_reflect_symbol(A.b);
  DoubledState out;
  out.plus = op_bony_weyl(A.a, cutoff, s.plus) +
             op_bony_weyl(A.b, cutoff, s.minus);
  out.minus = op_bony_weyl(b_check, cutoff, s.plus) +
              op_bony_weyl(a_check, cutoff, s.minus);
  return out;
}

}  // namespace paradiff
