#pragma once

// Paralinearization: the quasilinear system is written as
//
//   d_t U = iE [ Lambda U + Op^BW(A(U;x,xi)) U + R(U)[U] ],
//
// with A = A2 (i xi)^2 + A1 (i xi) + A0 in Weyl form.  The Weyl coefficients
// come from the Wirtinger derivatives of f,
//
//   a2 = f_uxx,  a1 = f_ux - dx f_uxx,  a0 = f_u + dx2 f_uxx / 4 - dx f_ux / 2,
//
// (b-row with ubar-derivatives), sampled at the state and spectrally
// differentiated.  The remainder is the exact discrete difference
// F(U) - Op^BW(A)U, so the decomposition reconstructs F(U) identically.

#include "nonlinearity.hpp"
#include "quantize.hpp"

namespace paradiff {

struct CoefficientFields {
  SpectralField a2, a1, a0, b2, b1, b0;
};

inline CoefficientFields coefficient_fields(const NonlinearitySpec& spec,
                                            const DoubledState& state) {
  const auto& g = state.grid();
  auto J = state_jets(state);
  auto field_of = [&](const MonomialList& L) {
    return SpectralField::from_samples(g, eval_monomials(L, J));
  };
  auto f_uxx = field_of(wirtinger(spec.monomials, 4));
  auto f_ux = field_of(wirtinger(spec.monomials, 2));
  auto f_u = field_of(wirtinger(spec.monomials, 0));
  auto f_ubxx = field_of(wirtinger(spec.monomials, 5));
  auto f_ubx = field_of(wirtinger(spec.monomials, 3));
  auto f_ub = field_of(wirtinger(spec.monomials, 1));

  CoefficientFields c;
  c.a2 = f_uxx;
  c.a1 = f_ux - spectral_derivative(f_uxx, 1);
  c.a0 = f_u + cd(0.25) * spectral_derivative(f_uxx, 2) -
         cd(0.5) * spectral_derivative(f_ux, 1);
  c.b2 = f_ubxx;
  c.b1 = f_ubx - spectral_derivative(f_ubxx, 1);
  c.b0 = f_ub + cd(0.25) * spectral_derivative(f_ubxx, 2) -
         cd(0.5) * spectral_derivative(f_ubx, 1);
  return c;
}

// always three terms per entry, profiles (i xi)^2, (i xi), 1 in that order
inline MatrixSymbol assemble_matrix_symbol(const CoefficientFields& c) {
  MatrixSymbol A = zero_matrix_symbol(c.a2.grid, 2.0);
  A.a.terms = {{c.a2, XiProfile::monomial(2)},
               {c.a1, XiProfile::monomial(1)},
               {c.a0, XiProfile::monomial(0)}};
  A.b.terms = {{c.b2, XiProfile::monomial(2)},
               {c.b1, XiProfile::monomial(1)},
               {c.b0, XiProfile::monomial(0)}};
  return A;
}

inline MatrixSymbol build_A(const NonlinearitySpec& spec,
                            const DoubledState& state) {
  return assemble_matrix_symbol(coefficient_fields(spec, state));
}

inline DoubledState remainder(const NonlinearitySpec& spec,
                              const DoubledState& state,
                              const CutoffProfile& cutoff) {
  auto F = evaluate_doubled(spec, state);
  auto AU = matrix_apply(build_A(spec, state), cutoff, state);
  return F - AU;
}

struct ParalinearizedSystem {
  MatrixSymbol A;
  DoubledState forcing;  // R(U)[U] at the state A was built from
  PotentialSpec potential;
  CutoffProfile cutoff;
  StructureClaim claim = StructureClaim::none;
};

inline ParalinearizedSystem paralinearize(const NonlinearitySpec& spec,
                                          const PotentialSpec& potential,
                                          const CutoffProfile& cutoff,
                                          const DoubledState& state) {
  ParalinearizedSystem sys;
  sys.A = build_A(spec, state);
  sys.forcing = evaluate_doubled(spec, state) -
                matrix_apply(sys.A, cutoff, state);
  sys.potential = potential;
  sys.cutoff = cutoff;
  sys.claim = spec.claim;
  return sys;
}

}  // namespace paradiff
