#pragma once

// Reduction of the paralinearized system to constant coefficients in four
// stages, each realized as a paradifferential conjugation frozen at the
// input state:
//
//   1. diagonalize the principal matrix E(1+A2) by C = exp(Z),
//   2. remove the off-diagonal first-order coefficient with Phi = 1 + Op(D),
//   3. flatten the principal coefficient by the paracomposition flow of the
//      torus diffeomorphism x -> x + beta(x),
//   4. flatten the first-order coefficient by exp(diag(s, conj s)).
//
// The output bundle carries the constant m2, m1 with m(xi) = m2 (i xi)^2 +
// m1 (i xi), the stage transforms with their inverses, and measured residual
// diagnostics. Order-zero coefficients are not reduced; together with the
// stage commutators they form the bounded remainder that
// conjugation_residual quantifies.

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "paralinearize.hpp"
#include "sharp.hpp"

namespace paradiff {

struct StageTransform {
  std::string name;
  std::function<DoubledState(const DoubledState&)> forward;
  std::function<DoubledState(const DoubledState&)> inverse;
};

inline StageTransform identity_stage(const std::string& name) {
  auto id = [](const DoubledState& u) { return u; };
  return {name, id, id};
}

namespace detail {

// row-major 2x2 complex matrix for the pointwise stage algebra
struct Mat2 {
  cd a, b, c, d;
};

inline Mat2 operator*(const Mat2& l, const Mat2& r) {
  return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
          l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

inline Mat2 operator+(const Mat2& l, const Mat2& r) {
  return {l.a + r.a, l.b + r.b, l.c + r.c, l.d + r.d};
}

inline Mat2 operator-(const Mat2& l, const Mat2& r) {
  return {l.a - r.a, l.b - r.b, l.c - r.c, l.d - r.d};
}

constexpr Mat2 mat_E{cd(1.0), cd(0.0), cd(0.0), cd(-1.0)};

}  // namespace detail

// ---------------------------------------------------------------------------
// step 1: diagonalization of the principal symbol

struct Step1Result {
  SpectralField s1, s2;   // entries of S; its columns are the eigenvectors
  SpectralField a2_1;     // lambda^(1) - 1
  SpectralField z;
  MatrixSymbol C, C_inv;  // C = exp(Z) = S^{-1}
  StageTransform phi;
};

inline Step1Result step1_diagonalize(const SpectralField& a2,
                                     const SpectralField& b2,
                                     const CutoffProfile& cutoff,
                                     double c1 = 1e-3, double c2 = 1e-3) {
  require_same_grid(a2, b2);
  const PeriodicGrid& g = a2.grid;
  auto as = a2.samples();
  auto bs = b2.samples();
  std::vector<cd> s1(g.n), s2(g.n), z(g.n), a21(g.n);
  for (int i = 0; i < g.n; ++i) {
    double ar = 1.0 + as[i].real();
    if (ar < c1)
      throw margin_error("step1: 1 + a2 below the ellipticity margin", ar,
                         g.node(i));
    double disc = ar * ar - std::norm(bs[i]);
    if (disc < c2)
      throw margin_error("step1: (1+a2)^2 - |b2|^2 below the ellipticity margin",
                         disc, g.node(i));
    double lam = std::sqrt(disc);
    double den = std::sqrt(2.0 * lam * (ar + lam));
    double t1 = (ar + lam) / den;
    cd t2 = -bs[i] / den;
    a21[i] = lam - 1.0;
    s1[i] = t1;
    s2[i] = t2;
    // |z| = arccosh(s1); the sign solves exp(Z) = S^{-1}, i.e. cosh|z| = s1
    // and (z/|z|) sinh|z| = -s2
    double t = std::acosh(std::max(t1, 1.0));
    double factor = t < 1e-8 ? 1.0 : t / std::sinh(t);
    z[i] = -t2 * factor;
  }
  Step1Result r;
  r.s1 = SpectralField::from_samples(g, s1);
  r.s2 = SpectralField::from_samples(g, s2);
  r.a2_1 = SpectralField::from_samples(g, a21);
  r.z = SpectralField::from_samples(g, z);

  MatrixSymbol Z = zero_matrix_symbol(g);
  Z.b = make_symbol(0.0, r.z, XiProfile::monomial(0));
  r.C = symbol_exp(Z);
  r.C_inv = symbol_exp(negate_matrix_symbol(Z));

  MatrixSymbol C = r.C, Ci = r.C_inv;
  CutoffProfile chi = cutoff;
  r.phi = {"diagonalize",
           [C, chi](const DoubledState& u) { return matrix_apply(C, chi, u); },
           [Ci, chi](const DoubledState& u) { return matrix_apply(Ci, chi, u); }};
  return r;
}

// max entry of S^{-1} E (1+A2) S - E diag(1 + a2_1) over the grid
inline double diagonalization_residual(const Step1Result& st,
                                       const SpectralField& a2,
                                       const SpectralField& b2) {
  using detail::Mat2;
  auto s1 = st.s1.samples(), s2 = st.s2.samples();
  auto as = a2.samples(), bs = b2.samples();
  auto a21 = st.a2_1.samples();
  double worst = 0.0;
  for (int i = 0; i < (int)s1.size(); ++i) {
    Mat2 S{s1[i], s2[i], std::conj(s2[i]), s1[i]};
    Mat2 Si{s1[i], -s2[i], -std::conj(s2[i]), s1[i]};
    double ar = 1.0 + as[i].real();
    Mat2 EM{ar, bs[i], -std::conj(bs[i]), -ar};
    Mat2 R = Si * EM * S;
    cd lam = 1.0 + a21[i];
    worst = std::max({worst, std::abs(R.a - lam), std::abs(R.b),
                      std::abs(R.c), std::abs(R.d + lam)});
  }
  return worst;
}

// First-order coefficients after conjugation by C. The printed source for
// this formula drops two E factors; they are restored here, fixed by the
// requirement that C = 1 reproduce A1 and that all three summands stay in
// the reality-preserving form (a, b; conj b, conj a):
//
//   A1^(1) = E [ C E(1+A2) dx(C^{-1}) - (dx C) E(1+A2) C^{-1} + C E A1 C^{-1} ].
struct FirstOrderResult {
  SpectralField a1_1, b1_1;
  double completion_defect = 0.0;  // rows 2 vs conjugated rows 1
};

inline FirstOrderResult conjugated_first_order(const Step1Result& st,
                                               const SpectralField& a2,
                                               const SpectralField& b2,
                                               const SpectralField& a1,
                                               const SpectralField& b1) {
  using detail::Mat2;
  const PeriodicGrid& g = a2.grid;
  auto s1 = st.s1.samples(), s2 = st.s2.samples();
  auto ds1 = spectral_derivative(st.s1, 1).samples();
  auto ds2 = spectral_derivative(st.s2, 1).samples();
  auto as = a2.samples(), bs = b2.samples();
  auto a1s = a1.samples(), b1s = b1.samples();
  std::vector<cd> r11(g.n), r12(g.n);
  double defect = 0.0;
  for (int i = 0; i < g.n; ++i) {
    Mat2 C{s1[i], -s2[i], -std::conj(s2[i]), s1[i]};
    Mat2 Ci{s1[i], s2[i], std::conj(s2[i]), s1[i]};
    Mat2 dC{ds1[i], -ds2[i], -std::conj(ds2[i]), ds1[i]};
    Mat2 dCi{ds1[i], ds2[i], std::conj(ds2[i]), ds1[i]};
    double ar = 1.0 + as[i].real();
    Mat2 EM{ar, bs[i], -std::conj(bs[i]), -ar};
    Mat2 A1m{a1s[i], b1s[i], std::conj(b1s[i]), std::conj(a1s[i])};
    Mat2 inner = C * EM * dCi - dC * EM * Ci + C * (detail::mat_E * A1m) * Ci;
    Mat2 out = detail::mat_E * inner;
    r11[i] = out.a;
    r12[i] = out.b;
    defect = std::max({defect, std::abs(out.d - std::conj(out.a)),
                       std::abs(out.c - std::conj(out.b))});
  }
  FirstOrderResult r;
  r.a1_1 = SpectralField::from_samples(g, r11);
  r.b1_1 = SpectralField::from_samples(g, r12);
  r.completion_defect = defect;
  return r;
}

// ---------------------------------------------------------------------------
// step 2: removal of the off-diagonal first-order coefficient

// gamma(xi) = 1/(i xi) for |xi| >= 1/2, odd cubic continuation below,
// matching value and slope at the junction
inline XiProfile gamma_profile(double xi_max) {
  return XiProfile::table(xi_max, [](double xi) -> cd {
    if (std::abs(xi) >= 0.5) return 1.0 / (cd(0.0, 1.0) * xi);
    return cd(0.0, 16.0 * xi * xi * xi - 8.0 * xi);
  });
}

struct Step2Result {
  DiscreteSymbol d;
  StageTransform phi;
};

inline Step2Result step2_offdiag(const SpectralField& b1_1,
                                 const SpectralField& a2_1,
                                 const CutoffProfile& cutoff,
                                 double margin = 1e-3) {
  require_same_grid(b1_1, a2_1);
  const PeriodicGrid& g = b1_1.grid;
  auto bs = b1_1.samples();
  auto as = a2_1.samples();
  std::vector<cd> coeff(g.n);
  for (int i = 0; i < g.n; ++i) {
    double ar = 1.0 + as[i].real();
    if (ar < margin)
      throw margin_error("step2: 1 + a2^(1) below margin", ar, g.node(i));
    coeff[i] = bs[i] / (2.0 * ar);
  }
  Step2Result r;
  r.d = make_symbol(-1.0, SpectralField::from_samples(g, coeff),
                    gamma_profile((double)g.n));
  MatrixSymbol D = zero_matrix_symbol(g, -1.0);
  D.b = r.d;
  CutoffProfile chi = cutoff;
  r.phi = {"offdiagonal",
           [D, chi](const DoubledState& u) {
             return u + matrix_apply(D, chi, u);
           },
           [D, chi](const DoubledState& u) {
             return u - matrix_apply(D, chi, u);
           }};
  return r;
}

// max_x |b1(x)(i xi) - 2 d(x,xi)(1+a2_1(x))(i xi)^2|, zero for |xi| >= 1/2
inline double offdiag_cancellation(const DiscreteSymbol& d,
                                   const SpectralField& b1_1,
                                   const SpectralField& a2_1, double xi) {
  auto cs = d.terms.at(0).coeff.samples();
  cd gval = d.terms.at(0).profile.eval(xi);
  auto bs = b1_1.samples();
  auto as = a2_1.samples();
  cd ixi(0.0, xi);
  double worst = 0.0;
  for (size_t i = 0; i < cs.size(); ++i) {
    cd lhs = bs[i] * ixi;
    cd rhs = 2.0 * cs[i] * gval * (1.0 + as[i].real()) * ixi * ixi;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// step 3: flattening the principal coefficient by a torus diffeomorphism

struct DiffeoResult {
  double m2 = 0.0;
  SpectralField gamma, beta;
  double newton_residual = 0.0;
  double chain_residual = 0.0;  // relative defect of (1+a2)(1+gamma_y)^2 = 1+m2
};

inline DiffeoResult step3_build_diffeo(const SpectralField& a2_2,
                                       double margin = 1e-3,
                                       double newton_tol = 1e-12,
                                       int newton_max = 50) {
  const PeriodicGrid& g = a2_2.grid;
  auto as = a2_2.samples();
  std::vector<double> q(g.n);
  double qmean = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double ar = 1.0 + as[i].real();
    if (ar < margin)
      throw margin_error("step3: 1 + a2^(2) below margin", ar, g.node(i));
    q[i] = 1.0 / std::sqrt(ar);
    qmean += q[i];
  }
  qmean /= g.n;

  DiffeoResult r;
  // [2 pi (integral dy / sqrt(1+a2))^{-1}]^2 = 1 + m2
  r.m2 = 1.0 / (qmean * qmean) - 1.0;
  double root = std::sqrt(1.0 + r.m2);
  std::vector<cd> gy(g.n);
  for (int i = 0; i < g.n; ++i) gy[i] = root * q[i] - 1.0;
  r.gamma = antiderivative_zero_mean(SpectralField::from_samples(g, gy));

  for (int i = 0; i < g.n; ++i) {
    double lhs = (1.0 + as[i].real()) * (1.0 + gy[i].real()) *
                 (1.0 + gy[i].real());
    r.chain_residual = std::max(
        r.chain_residual, std::abs(lhs - (1.0 + r.m2)) / (1.0 + r.m2));
  }

  // invert y = x + beta(x) against x = y + gamma(y): beta + gamma(x+beta) = 0
  auto dgamma = spectral_derivative(r.gamma, 1);
  std::vector<cd> beta(g.n);
  double worst = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double x = g.node(i);
    double b = -evaluate(r.gamma, x).real();
    double resid = 0.0;
    bool done = false;
    for (int it = 0; it < newton_max; ++it) {
      resid = std::abs(b + evaluate(r.gamma, x + b).real());
      if (resid < newton_tol) {
        done = true;
        break;
      }
      double slope = 1.0 + evaluate(dgamma, x + b).real();
      b -= (b + evaluate(r.gamma, x + b).real()) / slope;
    }
    if (!done)
      throw convergence_error("step3: Newton inversion of the diffeomorphism "
                              "did not converge",
                              resid);
    worst = std::max(worst, resid);
    beta[i] = b;
  }
  r.newton_residual = worst;
  r.beta = SpectralField::from_samples(g, beta);
  return r;
}

// flow of d/dtau Omega = Op^BW(b(tau;x)(i xi)) Omega, b = beta/(1+tau beta_x),
// from tau = 0 to 1 (backward: 1 to 0) by classical fourth-order steps;
// the same real transport acts on both components
inline DoubledState step3_paracomposition(const SpectralField& beta,
                                          const DoubledState& state,
                                          int n_tau_steps,
                                          const CutoffProfile& cutoff,
                                          bool backward = false) {
  if (n_tau_steps < 1)
    throw parameter_error("step3: n_tau_steps must be positive");
  const PeriodicGrid& g = state.grid();
  auto betas = beta.samples();
  auto bxs = spectral_derivative(beta, 1).samples();
  double theta = 1.0;
  double where = 0.0;
  for (int i = 0; i < g.n; ++i)
    if (1.0 + bxs[i].real() < theta) {
      theta = 1.0 + bxs[i].real();
      where = g.node(i);
    }
  if (theta < 1e-3)
    throw margin_error("step3: 1 + beta_x not bounded below", theta, where);

  auto generator = [&](double tau) {
    std::vector<cd> b(g.n);
    for (int i = 0; i < g.n; ++i) b[i] = betas[i] / (1.0 + tau * bxs[i]);
    MatrixSymbol M = zero_matrix_symbol(g, 1.0);
    M.a = make_symbol(1.0, SpectralField::from_samples(g, b),
                      XiProfile::monomial(1));
    return M;
  };

  DoubledState w = state;
  double t0 = backward ? 1.0 : 0.0;
  double h = (backward ? -1.0 : 1.0) / n_tau_steps;
  for (int k = 0; k < n_tau_steps; ++k) {
    double tau = t0 + k * h;
    auto Ma = generator(tau);
    auto Mm = generator(tau + 0.5 * h);
    auto Mb = generator(tau + h);
    auto k1 = matrix_apply(Ma, cutoff, w);
    auto k2 = matrix_apply(Mm, cutoff, w + cd(0.5 * h) * k1);
    auto k3 = matrix_apply(Mm, cutoff, w + cd(0.5 * h) * k2);
    auto k4 = matrix_apply(Mb, cutoff, w + cd(h) * k3);
    w = w + cd(h / 6.0) * (k1 + cd(2.0) * k2 + cd(2.0) * k3 + k4);
  }
  return w;
}

// double the step count until the flow settles in H^0
inline int adapt_tau_steps(const SpectralField& beta, const DoubledState& probe,
                           const CutoffProfile& cutoff, int start = 16,
                           double tol = 1e-9, int cap = 1024) {
  int nsteps = start;
  auto prev = step3_paracomposition(beta, probe, nsteps, cutoff);
  while (true) {
    int next = 2 * nsteps;
    auto cur = step3_paracomposition(beta, probe, next, cutoff);
    double diff = state_norm_hs(cur - prev, 0.0);
    if (diff < tol) return next;
    if (next >= cap)
      throw convergence_error("step3: tau refinement did not settle", diff);
    nsteps = next;
    prev = cur;
  }
}

// ---------------------------------------------------------------------------
// step 4: flattening the first-order coefficient

struct Step4Result {
  cd m1{0.0, 0.0};
  SpectralField s;
  StageTransform phi;
};

inline Step4Result step4_flatten(const SpectralField& a1_3, double m2,
                                 const CutoffProfile& cutoff) {
  const PeriodicGrid& g = a1_3.grid;
  if (1.0 + m2 <= 0.0)
    throw margin_error("step4: 1 + m2 must be positive", 1.0 + m2, 0.0);
  Step4Result r;
  r.m1 = mean(a1_3);
  // s = dx^{-1}((a1_3 - m1)/(2(1+m2))); subtracting the mean zeroes mode 0.
  // Conjugation by exp(s) shifts the first order by -2(1+m2) s_x (i xi) in
  // this quantization convention, so this sign cancels a1_3 - m1; the
  // opposite sign, which the printed source carries, doubles it instead
  // (measured as a leftover first-order symbol on probes).
  SpectralField num = cd(1.0 / (2.0 * (1.0 + m2))) * a1_3;
  num.at(0) = cd(0.0);
  r.s = antiderivative_zero_mean(num);

  MatrixSymbol S = zero_matrix_symbol(g);
  S.a = make_symbol(0.0, r.s, XiProfile::monomial(0));
  MatrixSymbol P = symbol_exp(S);
  MatrixSymbol Pi = symbol_exp(negate_matrix_symbol(S));
  CutoffProfile chi = cutoff;
  r.phi = {"flatten",
           [P, chi](const DoubledState& u) { return matrix_apply(P, chi, u); },
           [Pi, chi](const DoubledState& u) { return matrix_apply(Pi, chi, u); }};
  return r;
}

// ---------------------------------------------------------------------------
// the full reduction

struct ReduceOptions {
  bool skip_step3 = false;  // ablation: no diffeomorphism, m2 = mean(a2^(2))
  int tau_steps = 16;
  double tau_tol = 1e-9;
  double margin_c1 = 1e-3;
  double margin_c2 = 1e-3;
  double structure_tol = 1e-6;
  double newton_tol = 1e-12;
  int newton_max = 50;
  double inverse_tol = 1e-11;  // refinement of the composite inverse
  int inverse_max = 12;
  double inverse_norm = 0.0;  // Sobolev index the refinement is measured in
  bool measure_roundtrip = true;  // the solver skips this per-step diagnostic
};

struct ReductionDiagnostics {
  double margin1 = 0.0, margin2 = 0.0;  // ellipticity margins at the state
  double where1 = 0.0, where2 = 0.0;
  double diag_residual = 0.0;
  double completion_defect = 0.0;
  double cancel_residual = 0.0;
  double chain_residual = 0.0;
  double newton_residual = 0.0;
  int tau_steps = 0;
  double roundtrip = 0.0;  // ||Phi^{-1} Phi U - U||_{L^2} at the build state
};

struct ReductionBundle {
  PeriodicGrid grid;
  CutoffProfile cutoff;
  PotentialSpec potential;
  double reduced_m2 = 0.0;    // a2^(3), real
  cd reduced_m1{0.0, 0.0};    // a1^(4)
  SpectralField beta, gamma;  // the torus diffeomorphism and its inverse shift
  SpectralField z_field, s_field;
  DiscreteSymbol d_symbol;
  SpectralField a2_1, a1_1, b1_1, a1_3;  // tracked stage coefficients
  std::vector<StageTransform> stages;
  ReductionDiagnostics diagnostics;
  double inverse_tol = 1e-11;
  int inverse_max = 12;
  double inverse_norm = 0.0;

  DoubledState forward(const DoubledState& u) const {
    DoubledState w = u;
    for (const auto& st : stages) w = st.forward(w);
    return w;
  }

  // reversed per-stage first-order inverses; leaves a quadratic defect
  DoubledState approximate_inverse(const DoubledState& u) const {
    DoubledState w = u;
    for (auto it = stages.rbegin(); it != stages.rend(); ++it)
      w = it->inverse(w);
    return w;
  }

  // the composite inverse, refined so that forward(inverse(u)) = u. The
  // per-stage inverses leave a defect quadratic in the coefficients; used as
  // a preconditioner the error contracts by that factor per sweep. Without
  // this the defect would be injected once per time step in the solver,
  // accumulating linearly in the step count.
  DoubledState inverse(const DoubledState& u) const {
    return refine_inverse(approximate_inverse(u), u);
  }

  // same refinement from a caller-supplied starting guess; a good seed
  // (the previous iterate of whatever loop owns u) saves most of the sweeps
  DoubledState refine_inverse(DoubledState x, const DoubledState& u) const {
    double scale = 1.0 + state_norm_hs(u, inverse_norm);
    for (int it = 0; it < inverse_max; ++it) {
      auto r = u - forward(x);
      if (state_norm_hs(r, inverse_norm) < inverse_tol * scale) break;
      x = x + approximate_inverse(r);
    }
    return x;
  }

  // m(xi) = m2 (i xi)^2 + m1 (i xi)
  cd m_of(double xi) const {
    cd ixi(0.0, xi);
    return reduced_m2 * ixi * ixi + reduced_m1 * ixi;
  }
};

inline ReductionBundle reduce_full(const ParalinearizedSystem& sys,
                                   const DoubledState& state,
                                   const ReduceOptions& opts = {}) {
  const PeriodicGrid& g = state.grid();
  if (sys.A.a.terms.size() != 3 || sys.A.b.terms.size() != 3)
    throw structure_error("reduce_full: expected the three-term coefficient "
                          "layout (i xi)^2, (i xi), 1");
  const SpectralField& a2 = sys.A.a.terms[0].coeff;
  const SpectralField& a1 = sys.A.a.terms[1].coeff;
  const SpectralField& b2 = sys.A.b.terms[0].coeff;
  const SpectralField& b1 = sys.A.b.terms[1].coeff;

  ReductionBundle bundle;
  bundle.grid = g;
  bundle.cutoff = sys.cutoff;
  bundle.potential = sys.potential;

  {
    auto as = a2.samples();
    auto bs = b2.samples();
    double m1v = 1e300, m2v = 1e300, w1 = 0.0, w2 = 0.0;
    for (int i = 0; i < g.n; ++i) {
      double q1 = 1.0 + as[i].real();
      double q2 = q1 * q1 - std::norm(bs[i]);
      if (q1 < m1v) {
        m1v = q1;
        w1 = g.node(i);
      }
      if (q2 < m2v) {
        m2v = q2;
        w2 = g.node(i);
      }
    }
    bundle.diagnostics.margin1 = m1v;
    bundle.diagnostics.margin2 = m2v;
    bundle.diagnostics.where1 = w1;
    bundle.diagnostics.where2 = w2;
    if (m1v < opts.margin_c1)
      throw margin_error("ellipticity: 1 + a2 below c1", m1v, w1);
    if (m2v < opts.margin_c2)
      throw margin_error("ellipticity: (1+a2)^2 - |b2|^2 below c2", m2v, w2);
  }

  if (sys.claim == StructureClaim::hamiltonian) {
    double worst = 0.0;
    for (cd v : a2.samples()) worst = std::max(worst, std::abs(v.imag()));
    for (cd v : a1.samples()) worst = std::max(worst, std::abs(v.real()));
    if (worst > opts.structure_tol)
      throw structure_error(
          "reduce_full: coefficients are not of Hamiltonian type "
          "(defect " + std::to_string(worst) + ")");
  }

  auto st1 = step1_diagonalize(a2, b2, sys.cutoff, opts.margin_c1,
                               opts.margin_c2);
  auto fo = conjugated_first_order(st1, a2, b2, a1, b1);
  bundle.a2_1 = st1.a2_1;
  bundle.z_field = st1.z;
  bundle.a1_1 = fo.a1_1;
  bundle.b1_1 = fo.b1_1;
  bundle.diagnostics.diag_residual = diagonalization_residual(st1, a2, b2);
  bundle.diagnostics.completion_defect = fo.completion_defect;

  auto st2 = step2_offdiag(fo.b1_1, st1.a2_1, sys.cutoff, opts.margin_c1);
  bundle.d_symbol = st2.d;
  for (double xi : {1.0, 2.0, (double)(g.n / 4)})
    bundle.diagnostics.cancel_residual =
        std::max(bundle.diagnostics.cancel_residual,
                 offdiag_cancellation(st2.d, fo.b1_1, st1.a2_1, xi));

  // after step 2 the tracked orders are unchanged: a2^(2) = a2^(1),
  // a1^(2) = a1^(1)
  const SpectralField& a2_2 = st1.a2_1;
  const SpectralField& a1_2 = fo.a1_1;

  StageTransform phi3 = identity_stage("paracomposition");
  SpectralField a1_3 = a1_2;
  double m2 = 0.0;
  if (opts.skip_step3) {
    m2 = mean(a2_2).real();
    bundle.gamma = SpectralField::zero(g);
    bundle.beta = SpectralField::zero(g);
  } else {
    auto dif = step3_build_diffeo(a2_2, opts.margin_c1, opts.newton_tol,
                                  opts.newton_max);
    m2 = dif.m2;
    bundle.gamma = dif.gamma;
    bundle.beta = dif.beta;
    bundle.diagnostics.chain_residual = dif.chain_residual;
    bundle.diagnostics.newton_residual = dif.newton_residual;
    if (max_abs_coeff(dif.beta) > 0.0) {
      int nsteps = adapt_tau_steps(dif.beta, state, sys.cutoff,
                                   opts.tau_steps, opts.tau_tol);
      bundle.diagnostics.tau_steps = nsteps;
      SpectralField beta = dif.beta;
      CutoffProfile chi = sys.cutoff;
      phi3 = {"paracomposition",
              [beta, nsteps, chi](const DoubledState& u) {
                return step3_paracomposition(beta, u, nsteps, chi, false);
              },
              [beta, nsteps, chi](const DoubledState& u) {
                return step3_paracomposition(beta, u, nsteps, chi, true);
              }};
      // a1^(3)(x) = [a1^(2) (1 + gamma_y)](y) at y = x + beta(x)
      auto gy = spectral_derivative(dif.gamma, 1);
      auto prod = map_samples2(a1_2, gy,
                               [](cd a, cd G) { return a * (1.0 + G); });
      auto betas = dif.beta.samples();
      std::vector<cd> vals(g.n);
      for (int i = 0; i < g.n; ++i)
        vals[i] = evaluate(prod, g.node(i) + betas[i].real());
      a1_3 = SpectralField::from_samples(g, vals);
    }
  }
  bundle.a1_3 = a1_3;
  bundle.reduced_m2 = m2;

  auto st4 = step4_flatten(a1_3, m2, sys.cutoff);
  bundle.reduced_m1 = st4.m1;
  bundle.s_field = st4.s;

  // stages whose coefficient vanishes identically collapse to the identity;
  // Op^BW of a constant is the exact multiplier, so this only skips work
  StageTransform phi1 = max_abs_coeff(st1.z) == 0.0
                            ? identity_stage("diagonalization")
                            : st1.phi;
  StageTransform phi2 = max_abs_coeff(fo.b1_1) == 0.0
                            ? identity_stage("off-diagonal")
                            : st2.phi;
  StageTransform phi4 = max_abs_coeff(st4.s) == 0.0
                            ? identity_stage("flattening")
                            : st4.phi;
  bundle.stages = {phi1, phi2, phi3, phi4};
  bundle.inverse_tol = opts.inverse_tol;
  bundle.inverse_max = opts.inverse_max;
  bundle.inverse_norm = opts.inverse_norm;

  if (opts.measure_roundtrip) {
    auto rt = bundle.inverse(bundle.forward(state));
    bundle.diagnostics.roundtrip = state_norm_hs(rt - state, 0.0);
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// measured remainder of the conjugation on single-mode probes

// applies Phi (iE(Lambda + Op^BW(A))) Phi^{-1} - iE(Lambda + L) to e^{ikx}
// probes and reports ||res||_{L^2} / k^2 per mode
inline std::vector<std::pair<int, double>> conjugation_residual(
    const ParalinearizedSystem& sys, const ReductionBundle& bundle,
    const std::vector<int>& probes) {
  const PeriodicGrid& g = bundle.grid;
  auto G = [&](const DoubledState& u) {
    return apply_iE(apply_lambda(u, sys.potential) +
                    matrix_apply(sys.A, bundle.cutoff, u));
  };
  std::vector<std::pair<int, double>> rows;
  for (int k : probes) {
    auto probe = SpectralField::zero(g);
    probe.at(k) = sqrt_two_pi;
    DoubledState P = make_doubled(probe);

    DoubledState GL = P;
    for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
      cd mp = lambda_mode(j, sys.potential) + bundle.m_of((double)j);
      cd mm = lambda_mode(-j, sys.potential) + bundle.m_of((double)-j);
      GL.plus.at(j) = cd(0.0, 1.0) * mp * P.plus.at(j);
      GL.minus.at(j) = cd(0.0, -1.0) * mm * P.minus.at(j);
    }

    auto res = bundle.forward(G(bundle.inverse(P))) - GL;
    rows.push_back({k, state_norm_hs(res, 0.0) / ((double)k * (double)k)});
  }
  return rows;
}

}  // namespace paradiff
