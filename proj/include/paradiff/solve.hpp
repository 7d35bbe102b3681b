#pragma once

// Time integration: exact constant-coefficient flows, the frozen-coefficient
// linear solve (reduction + Duhamel fixed point), the outer quasilinear
// iteration, a paradifferential-free reference integrator, and conserved
// quantities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "paradiff/nonlinearity.hpp"
#include "paradiff/paralinearize.hpp"
#include "paradiff/reduce.hpp"

namespace paradiff {

struct SolverConfig {
  int n = 256;
  double s = 6.0;           // Sobolev index of the solution space
  double T = 0.01;
  double dt = 1e-4;
  double duhamel_step = 0.0;  // sigma quadrature step inside [t, t+dt]; 0 = dt
  double tolerance = 1e-8;    // fixed-point and outer stopping tolerance
  int max_outer = 25;
  double delta = 0.5;
  int rho = 2;
  int max_fixed_point = 64;
  int max_halvings = 4;  // divergence fallback: halve T and retry
  ReduceOptions reduce;  // forwarded to the per-step reductions
};

inline void validate_config(const SolverConfig& c) {
  if (!(c.T > 0.0)) throw parameter_error("T must be positive");
  if (!(c.dt > 0.0)) throw parameter_error("dt must be positive");
  if (!(c.tolerance > 0.0)) throw parameter_error("tolerance must be positive");
  if (c.s < 2.0) throw parameter_error("sobolev index s must be at least 2");
  if (c.n < 8) throw parameter_error("grid size too small");
}

struct SampleDiagnostics {
  double hs_norm = 0.0;
  double hs2_norm = 0.0;  // H^{s-2}, the contraction norm
  double energy = std::numeric_limits<double>::quiet_NaN();
  double reality_violation = 0.0;
  double parity_violation = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DoubledState> states;
  std::vector<SampleDiagnostics> samples;
};

// m(xi) = m2 (i xi)^2 + m1 (i xi), the reduced constant correction
inline cd m_correction(double m2, cd m1, double xi) {
  cd ixi(0.0, xi);
  return m2 * ixi * ixi + m1 * ixi;
}

// exact flow of dW = iE (Lambda + m) W: plus modes rotate by
// e^{it(lambda_j + m(j))}, minus modes by the conjugate rule
inline DoubledState constant_flow(double m2, cd m1, const PotentialSpec& pot,
                                  const DoubledState& w, double t) {
  DoubledState out = w;
  const PeriodicGrid& g = w.grid();
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
    cd mp = cd(lambda_mode(j, pot)) + m_correction(m2, m1, (double)j);
    cd mm = cd(lambda_mode(-j, pot)) + m_correction(m2, m1, -(double)j);
    out.plus.at(j) = std::exp(cd(0.0, 1.0) * t * mp) * w.plus.at(j);
    out.minus.at(j) = std::exp(cd(0.0, -1.0) * t * mm) * w.minus.at(j);
  }
  return out;
}

// generator of the above: iE (Lambda + m) as a Fourier multiplier
inline DoubledState constant_generator(double m2, cd m1,
                                       const PotentialSpec& pot,
                                       const DoubledState& w) {
  DoubledState out = w;
  const PeriodicGrid& g = w.grid();
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j) {
    cd mp = cd(lambda_mode(j, pot)) + m_correction(m2, m1, (double)j);
    cd mm = cd(lambda_mode(-j, pot)) + m_correction(m2, m1, -(double)j);
    out.plus.at(j) = cd(0.0, 1.0) * mp * w.plus.at(j);
    out.minus.at(j) = cd(0.0, -1.0) * mm * w.minus.at(j);
  }
  return out;
}

// H = int -|ux|^2 + (P*u) ubar + F(u, ubar, ux, ubarx) dx evaluated
// spectrally; the quadratic part telescopes into sum lambda_j |uhat(j)|^2
inline double hamiltonian_energy(const NonlinearitySpec& spec,
                                 const PotentialSpec& pot,
                                 const DoubledState& state) {
  if (!spec.has_energy)
    throw capability_error("no energy density attached to this nonlinearity");
  const PeriodicGrid& g = state.grid();
  double quad = 0.0;
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j)
    quad += lambda_mode(j, pot) * std::norm(state.plus.at(j));
  cd cubic(0.0);
  if (!spec.energy.empty()) {
    auto dens = eval_monomials(spec.energy, state_jets(state));
    for (cd v : dens) cubic += v;
    cubic *= two_pi / (double)g.n;
  }
  cd total = cd(quad) + cubic;
  if (std::abs(total.imag()) > 1e-10)
    throw structure_error("energy density integrated to a complex value (Im " +
                          std::to_string(total.imag()) + ")");
  return total.real();
}

inline void fill_diagnostics(Trajectory& traj, const NonlinearitySpec& spec,
                             const PotentialSpec& pot, double s) {
  traj.samples.assign(traj.states.size(), SampleDiagnostics{});
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const DoubledState& st = traj.states[i];
    SampleDiagnostics& d = traj.samples[i];
    d.hs_norm = state_norm_hs(st, s);
    d.hs2_norm = state_norm_hs(st, s - 2.0);
    d.reality_violation = check_subspace(st, Subspace::reality).max_violation;
    d.parity_violation = check_subspace(st, Subspace::parity).max_violation;
    if (spec.has_energy) d.energy = hamiltonian_energy(spec, pot, st);
  }
}

// the doubled state of the conjugate unknown: (u, ubar) -> (ubar, u).
// Presets with conjugate_dynamics store f for the conjugate variable
// (the Christ family), so the solver swaps on entry and exit.
inline DoubledState state_conjugate(const DoubledState& s) {
  return {s.minus, s.plus};
}

// one frozen time sample: the paralinearized system (coefficients and
// remainder forcing) together with the state it was built from
struct FrozenSample {
  ParalinearizedSystem sys;
  DoubledState state;
};

struct DuhamelReport {
  // per time step, the fixed-point increments in H^s
  std::vector<std::vector<double>> increments;
};

// Frozen-coefficient linear solve on [0, (size-1) dt]. Per step: reduce at
// the frozen sample, conjugate the data to W = Phi V, then solve
//   W(sigma) = e^{sigma L} W(0) + int_0^sigma e^{(sigma-tau) L} F(W(tau)) dtau
//   F(W) = Phi[G(Phi^{-1} W) + iE R] - L W
// by Picard iteration with composite trapezoid quadrature on the sigma
// nodes. G carries the step's frozen paradifferential part, R the remainder
// forcing interpolated between the two endpoint samples, and L = Lambda + m
// the reduced constant-coefficient generator.
inline Trajectory solve_frozen_linear(const std::vector<FrozenSample>& frozen,
                                      const DoubledState& v0,
                                      const SolverConfig& cfg,
                                      DuhamelReport* report = nullptr) {
  validate_config(cfg);
  if (frozen.size() < 2)
    throw parameter_error("frozen trajectory must contain at least two samples");
  const int nsteps = (int)frozen.size() - 1;
  const int ksub =
      cfg.duhamel_step <= 0.0
          ? 1
          : std::max(1, (int)std::llround(cfg.dt / cfg.duhamel_step));
  const double h = cfg.dt / (double)ksub;

  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(v0);

  ReduceOptions ropts = cfg.reduce;
  ropts.measure_roundtrip = false;  // the refined inverse is used directly
  // refine preimages in the solution norm: an H^0-small leftover can still
  // be large in H^s at the top modes and gets reinjected by the iteration
  ropts.inverse_norm = cfg.s;

  DoubledState v = v0;
  for (int k = 0; k < nsteps; ++k) {
    const ParalinearizedSystem& sys = frozen[k].sys;
    auto bundle = reduce_full(sys, frozen[k].state, ropts);
    const double m2 = bundle.reduced_m2;
    const cd m1 = bundle.reduced_m1;

    auto flow = [&](const DoubledState& w, double t) {
      return constant_flow(m2, m1, sys.potential, w, t);
    };
    auto force = [&](const DoubledState& w, const DoubledState& u,
                     const DoubledState& r) {
      auto gu = apply_iE(apply_lambda(u, sys.potential) +
                         matrix_apply(sys.A, bundle.cutoff, u) + r);
      return bundle.forward(gu) -
             constant_generator(m2, m1, sys.potential, w);
    };

    DoubledState ra = frozen[k].sys.forcing;
    DoubledState rb = frozen[k + 1].sys.forcing;

    DoubledState w0 = bundle.forward(v);
    std::vector<DoubledState> wh, w, vnode, rnode;
    for (int j = 0; j <= ksub; ++j) {
      wh.push_back(flow(w0, j * h));
      w.push_back(wh.back());
      // seed each node's preimage with the incoming state; sigma is small
      vnode.push_back(j == 0 ? v : bundle.refine_inverse(v, wh[j]));
      double th = (double)j / (double)ksub;
      rnode.push_back(cd(1.0 - th) * ra + cd(th) * rb);
    }
    DoubledState f0 = force(w[0], vnode[0], rnode[0]);  // node 0 never moves

    std::vector<double> incs;
    double inc = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_fixed_point && inc >= cfg.tolerance; ++it) {
      std::vector<DoubledState> f = {f0};
      for (int j = 1; j <= ksub; ++j)
        f.push_back(force(w[j], vnode[j], rnode[j]));
      inc = 0.0;
      for (int j = 1; j <= ksub; ++j) {
        DoubledState acc = cd(0.5) * flow(f[0], j * h);
        for (int i = 1; i < j; ++i) acc = acc + flow(f[i], (j - i) * h);
        acc = acc + cd(0.5) * f[j];
        DoubledState wnew = wh[j] + cd(h) * acc;
        inc = std::max(inc, state_norm_hs(wnew - w[j], cfg.s));
        w[j] = wnew;
        vnode[j] = bundle.refine_inverse(vnode[j], w[j]);
      }
      incs.push_back(inc);
    }
    if (report) report->increments.push_back(incs);
    if (inc >= cfg.tolerance)
      throw convergence_error("Duhamel fixed point stalled at t = " +
                                  std::to_string(k * cfg.dt),
                              inc);

    v = vnode[ksub];
    out.times.push_back((k + 1) * cfg.dt);
    out.states.push_back(v);
  }
  return out;
}

// convenience form: freeze the coefficients along a given trajectory
inline Trajectory solve_frozen_linear(const NonlinearitySpec& spec,
                                      const PotentialSpec& pot,
                                      const Trajectory& u_prev,
                                      const DoubledState& v0,
                                      const SolverConfig& cfg,
                                      DuhamelReport* report = nullptr) {
  validate_nonlinearity(spec);
  pot.validate();
  CutoffProfile cutoff{cfg.delta};
  std::vector<FrozenSample> frozen;
  frozen.reserve(u_prev.states.size());
  for (const auto& st : u_prev.states)
    frozen.push_back({paralinearize(spec, pot, cutoff, st), st});
  Trajectory traj = solve_frozen_linear(frozen, v0, cfg, report);
  fill_diagnostics(traj, spec, pot, cfg.s);
  return traj;
}

struct ConvergenceReport {
  std::vector<double> sup_diffs;  // sup_t ||U_n - U_{n-1}||_{H^{s-2}}
  std::vector<double> ratios;     // successive quotients of the above
  int iterations = 0;
  int halvings = 0;
  double T_effective = 0.0;
  bool converged = false;
};

struct QuasilinearResult {
  Trajectory trajectory;
  ConvergenceReport report;
};

inline void enforce_claims(const NonlinearitySpec& spec,
                           const PotentialSpec& pot) {
  if (spec.claim == StructureClaim::hamiltonian) {
    auto rep = check_hamiltonian(spec);
    if (!rep.ok)
      throw structure_error(
          "hamiltonian claim rejected (symbolic match " +
          std::string(rep.symbolic_ok ? "ok" : "failed") + ", max Im a2 " +
          std::to_string(rep.max_a2_imag) + ", max Re a1 " +
          std::to_string(rep.max_a1_real) + ")");
  } else if (spec.claim == StructureClaim::parity) {
    auto rep = check_parity(spec, pot);
    if (!rep.ok)
      throw structure_error(
          std::string("parity claim rejected (even in ux: ") +
          (rep.even_in_ux ? "yes" : "no") + ", real d_uxx f: " +
          (rep.real_uxx_derivative ? "yes" : "no") + ", symmetric potential: " +
          (rep.symmetric_potential ? "yes" : "no") + ")");
  }
}

namespace detail {

// stepped rather than one-shot so that the arithmetic matches the
// per-step frozen solve exactly when f = 0
inline Trajectory free_flow_trajectory(const PotentialSpec& pot,
                                       const DoubledState& u0, int nsteps,
                                       double dt) {
  Trajectory t;
  t.times.push_back(0.0);
  t.states.push_back(u0);
  for (int k = 1; k <= nsteps; ++k) {
    t.times.push_back(k * dt);
    t.states.push_back(constant_flow(0.0, cd(0.0), pot, t.states.back(), dt));
  }
  return t;
}

inline double sup_diff_hs(const Trajectory& a, const Trajectory& b,
                          double index) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    worst = std::max(worst,
                     state_norm_hs(a.states[i] - b.states[i], index));
  return worst;
}

}  // namespace detail

// the outer scheme: U_0 is the free flow, U_n solves the linear problem with
// coefficients frozen along U_{n-1}, stopping on a Cauchy condition in
// H^{s-2}. Divergence (the difference growing twice in a row) halves T and
// restarts, up to max_halvings.
inline QuasilinearResult iterate_quasilinear(const NonlinearitySpec& spec,
                                             const PotentialSpec& pot,
                                             const DoubledState& u0,
                                             const SolverConfig& cfg) {
  validate_nonlinearity(spec);
  validate_config(cfg);
  pot.validate();
  enforce_claims(spec, pot);

  auto real0 = check_subspace(u0, Subspace::reality, 1e-8);
  if (!real0.ok)
    throw parameter_error("initial state leaves the reality subspace by " +
                          std::to_string(real0.max_violation));
  if (spec.claim == StructureClaim::parity) {
    auto par0 = check_subspace(u0, Subspace::parity, 1e-8);
    if (!par0.ok)
      throw parameter_error("parity preset but the initial state is uneven (" +
                            std::to_string(par0.max_violation) + ")");
  }

  DoubledState w0 = spec.conjugate_dynamics ? state_conjugate(u0) : u0;
  CutoffProfile cutoff{cfg.delta};

  double T_cur = cfg.T;
  ConvergenceReport rep;
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
    int nsteps = std::max(1, (int)std::llround(T_cur / cfg.dt));
    rep = ConvergenceReport{};
    rep.halvings = attempt;
    rep.T_effective = nsteps * cfg.dt;

    Trajectory prev = detail::free_flow_trajectory(pot, w0, nsteps, cfg.dt);
    bool diverged = false;
    int grew = 0;
    for (int n = 1; n <= cfg.max_outer; ++n) {
      std::vector<FrozenSample> frozen;
      frozen.reserve(prev.states.size());
      for (const auto& st : prev.states)
        frozen.push_back({paralinearize(spec, pot, cutoff, st), st});
      Trajectory cur = solve_frozen_linear(frozen, w0, cfg);

      double d = detail::sup_diff_hs(cur, prev, cfg.s - 2.0);
      if (!rep.sup_diffs.empty())
        rep.ratios.push_back(d / rep.sup_diffs.back());
      bool growing = !rep.sup_diffs.empty() && d > rep.sup_diffs.back() &&
                     d > cfg.tolerance;
      grew = growing ? grew + 1 : 0;
      rep.sup_diffs.push_back(d);
      rep.iterations = n;
      prev = cur;
      if (d < cfg.tolerance) {
        rep.converged = true;
        break;
      }
      if (grew >= 2) {
        diverged = true;
        break;
      }
    }
    if (!diverged) {
      if (spec.conjugate_dynamics)
        for (auto& st : prev.states) st = state_conjugate(st);
      fill_diagnostics(prev, spec, pot, cfg.s);
      return {prev, rep};
    }
    T_cur *= 0.5;
  }
  std::string msg = "quasilinear iteration diverged after " +
                    std::to_string(cfg.max_halvings) + " halvings (diffs";
  for (double d : rep.sup_diffs) msg += " " + std::to_string(d);
  msg += ")";
  throw convergence_error(msg, rep.sup_diffs.empty() ? 0.0
                                                     : rep.sup_diffs.back());
}

// method-of-lines oracle: exact integrating factor for the linear part,
// Lawson RK4 on the pseudospectral nonlinearity; no paradifferential
// machinery anywhere
inline Trajectory reference_solver(const NonlinearitySpec& spec,
                                   const PotentialSpec& pot,
                                   const DoubledState& u0,
                                   const SolverConfig& cfg) {
  validate_nonlinearity(spec);
  validate_config(cfg);
  pot.validate();

  DoubledState u = spec.conjugate_dynamics ? state_conjugate(u0) : u0;
  auto N = [&](const DoubledState& st) {
    return apply_iE(evaluate_doubled(spec, st));
  };
  auto E = [&](const DoubledState& st, double t) {
    return constant_flow(0.0, cd(0.0), pot, st, t);
  };

  const int nsteps = std::max(1, (int)std::llround(cfg.T / cfg.dt));
  const double dt = cfg.dt;
  const double norm0 = state_norm_hs(u, cfg.s);

  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(spec.conjugate_dynamics ? state_conjugate(u) : u);
  for (int k = 0; k < nsteps; ++k) {
    DoubledState uh = E(u, 0.5 * dt);
    DoubledState k1 = N(u);
    DoubledState k2 = N(uh + cd(0.5 * dt) * E(k1, 0.5 * dt));
    DoubledState k3 = N(uh + cd(0.5 * dt) * k2);
    DoubledState uf = E(uh, 0.5 * dt);
    DoubledState k4 = N(uf + cd(dt) * E(k3, 0.5 * dt));
    u = uf + cd(dt / 6.0) *
                 (E(k1, dt) + cd(2.0) * E(k2 + k3, 0.5 * dt) + k4);

    double norm = state_norm_hs(u, cfg.s);
    if (!std::isfinite(norm) || norm > 1e6 * (1.0 + norm0))
      throw convergence_error("reference integrator blew up at t = " +
                                  std::to_string((k + 1) * dt) +
                                  "; reduce dt",
                              norm);
    out.times.push_back((k + 1) * dt);
    out.states.push_back(spec.conjugate_dynamics ? state_conjugate(u) : u);
  }
  fill_diagnostics(out, spec, pot, cfg.s);
  return out;
}

}  // namespace paradiff
