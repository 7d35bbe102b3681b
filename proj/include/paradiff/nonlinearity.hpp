#pragma once

// Polynomial nonlinearities f(u, ubar, ux, ubarx, uxx, ubarxx) as monomial
// lists with exact Wirtinger calculus.  The doubled extension (f1, f2) is
// generated by mirroring each monomial (u <-> ubar slots, conjugated
// coefficient), so f2 = conj(f1) on the reality subspace by construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "field.hpp"
#include "state.hpp"

namespace paradiff {

enum class StructureClaim { hamiltonian, parity, none };

// slots: 0 u, 1 ubar, 2 ux, 3 ubarx, 4 uxx, 5 ubarxx
struct Monomial {
  cd coeff{0.0};
  std::array<int, 6> exp{0, 0, 0, 0, 0, 0};

  int degree() const {
    int d = 0;
    for (int e : exp) d += e;
    return d;
  }
};

using MonomialList = std::vector<Monomial>;

struct NonlinearitySpec {
  std::string name = "custom";
  MonomialList monomials;
  bool has_energy = false;
  MonomialList energy;  // density F(u, ubar, ux, ubarx)
  StructureClaim claim = StructureClaim::none;
  bool conjugate_dynamics = false;
};

inline void validate_nonlinearity(const NonlinearitySpec& spec) {
  for (const auto& m : spec.monomials) {
    for (int e : m.exp)
      if (e < 0) throw parameter_error("negative monomial exponent");
    if (m.degree() < 2)
      throw parameter_error("nonlinearity must vanish to second order");
  }
  for (const auto& m : spec.energy) {
    if (m.exp[4] != 0 || m.exp[5] != 0)
      throw structure_error("energy density admits first derivatives only");
    if (m.degree() < 2)
      throw parameter_error("energy density must vanish to second order");
  }
}

inline MonomialList normalize(const MonomialList& L) {
  std::map<std::array<int, 6>, cd> acc;
  for (const auto& m : L) acc[m.exp] += m.coeff;
  MonomialList out;
  for (const auto& [e, c] : acc)
    if (std::abs(c) > 1e-14) out.push_back({c, e});
  return out;
}

inline Monomial mirror_monomial(const Monomial& m) {
  return {std::conj(m.coeff),
          {m.exp[1], m.exp[0], m.exp[3], m.exp[2], m.exp[5], m.exp[4]}};
}

inline MonomialList mirror_monomials(const MonomialList& L) {
  MonomialList out;
  out.reserve(L.size());
  for (const auto& m : L) out.push_back(mirror_monomial(m));
  return out;
}

inline MonomialList wirtinger(const MonomialList& L, int var) {
  if (var < 0 || var > 5) throw parameter_error("wirtinger slot out of range");
  MonomialList out;
  for (const auto& m : L) {
    if (m.exp[var] == 0) continue;
    Monomial d = m;
    d.coeff *= (double)m.exp[var];
    d.exp[var] -= 1;
    out.push_back(d);
  }
  return normalize(out);
}

inline NonlinearitySpec wirtinger_derivative(const NonlinearitySpec& spec,
                                             int var) {
  NonlinearitySpec out = spec;
  out.monomials = wirtinger(spec.monomials, var);
  out.has_energy = false;
  out.energy.clear();
  return out;
}

// total x-derivative of a monomial expression, chain rule slot -> slot'
inline MonomialList total_x_derivative(const MonomialList& L) {
  MonomialList out;
  for (const auto& m : L)
    for (int v = 0; v < 6; ++v) {
      if (m.exp[v] == 0) continue;
      if (v >= 4)
        throw structure_error(
            "total derivative would exceed second order");
      Monomial d = m;
      d.coeff *= (double)m.exp[v];
      d.exp[v] -= 1;
      d.exp[v + 2] += 1;
      out.push_back(d);
    }
  return normalize(out);
}

inline bool monomials_equal(const MonomialList& a, const MonomialList& b,
                            double tol = 1e-12) {
  std::map<std::array<int, 6>, cd> acc;
  for (const auto& m : normalize(a)) acc[m.exp] += m.coeff;
  for (const auto& m : normalize(b)) acc[m.exp] -= m.coeff;
  for (const auto& [e, c] : acc)
    if (std::abs(c) > tol) return false;
  return true;
}

// samples of the six slots of a doubled state
struct StateJets {
  std::array<std::vector<cd>, 6> slot;
  int n = 0;
};

inline StateJets state_jets(const DoubledState& s) {
  StateJets J;
  J.n = s.n();
  J.slot[0] = s.plus.samples();
  J.slot[1] = s.minus.samples();
  J.slot[2] = spectral_derivative(s.plus, 1).samples();
  J.slot[3] = spectral_derivative(s.minus, 1).samples();
  J.slot[4] = spectral_derivative(s.plus, 2).samples();
  J.slot[5] = spectral_derivative(s.minus, 2).samples();
  return J;
}

inline std::vector<cd> eval_monomials(const MonomialList& L,
                                      const StateJets& J) {
  std::vector<cd> out(J.n, cd(0.0));
  for (const auto& m : L)
    for (int i = 0; i < J.n; ++i) {
      cd v = m.coeff;
      for (int s = 0; s < 6; ++s)
        for (int e = 0; e < m.exp[s]; ++e) v *= J.slot[s][i];
      out[i] += v;
    }
  return out;
}

// the doubled vector nonlinearity (f1, f2)
inline DoubledState evaluate_doubled(const NonlinearitySpec& spec,
                                     const DoubledState& s) {
  auto J = state_jets(s);
  const auto& g = s.grid();
  return {SpectralField::from_samples(g, eval_monomials(spec.monomials, J)),
          SpectralField::from_samples(
              g, eval_monomials(mirror_monomials(spec.monomials), J))};
}

inline NonlinearitySpec preset_nonlinearity(const std::string& name) {
  NonlinearitySpec s;
  s.name = name;
  if (name == "zero") {
    s.claim = StructureClaim::hamiltonian;
    s.has_energy = true;
    return s;
  }
  if (name == "manuela") {
    // f = u ub uxx + ub ux^2 + u ux - ub ux, from the density
    // F = -u ub ux ubx + u ub ux + u ub ubx
    s.monomials = {{cd(1.0), {1, 1, 0, 0, 1, 0}},
                   {cd(1.0), {0, 1, 2, 0, 0, 0}},
                   {cd(1.0), {1, 0, 1, 0, 0, 0}},
                   {cd(-1.0), {0, 1, 1, 0, 0, 0}}};
    s.has_energy = true;
    s.energy = {{cd(-1.0), {1, 1, 1, 1, 0, 0}},
                {cd(1.0), {1, 1, 1, 0, 0, 0}},
                {cd(1.0), {1, 1, 0, 1, 0, 0}}};
    s.claim = StructureClaim::hamiltonian;
    return s;
  }
  if (name == "manuela1" || name == "manuela2") {
    double sign = (name == "manuela1") ? 1.0 : -1.0;
    s.monomials = {{cd(sign), {1, 1, 0, 0, 1, 0}}};
    s.claim = StructureClaim::parity;
    return s;
  }
  if (name.rfind("christ", 0) == 0) {
    int p = 2;
    std::string digits;
    for (char c : name.substr(6))
      if (c >= '0' && c <= '9') digits.push_back(c);
    if (!digits.empty()) p = std::stoi(digits);
    if (p < 2) throw parameter_error("christ preset needs p >= 2");
    s.name = "christ" + std::to_string(p);
    s.monomials = {{cd(0.0, 1.0),
                    {p - 1, 0, 1, 0, 0, 0}}};
    s.claim = StructureClaim::none;
    s.conjugate_dynamics = true;
    return s;
  }
  throw config_error("unknown nonlinearity preset: " + name);
}

struct HamiltonianReport {
  bool ok = false;
  bool symbolic_ok = false;
  MonomialList mismatch;  // expansion minus f, nonzero entries
  double max_a2_imag = 0.0;
  double max_a1_real = 0.0;
};

// expands f = d_ub F - D_x(d_ubx F) and compares with the stored f;
// additionally samples a2 / a1 reality on random states
inline HamiltonianReport check_hamiltonian(const NonlinearitySpec& spec) {
  if (!spec.has_energy)
    throw capability_error(
        "no energy density attached; Hamiltonian check unavailable");
  HamiltonianReport rep;

  MonomialList expansion = wirtinger(spec.energy, 1);
  for (auto& m : total_x_derivative(wirtinger(spec.energy, 3))) {
    m.coeff = -m.coeff;
    expansion.push_back(m);
  }
  expansion = normalize(expansion);
  rep.symbolic_ok = monomials_equal(expansion, spec.monomials);
  if (!rep.symbolic_ok) {
    for (auto& m : spec.monomials) {
      Monomial neg = m;
      neg.coeff = -neg.coeff;
      expansion.push_back(neg);
    }
    rep.mismatch = normalize(expansion);
  }

  auto fuxx = wirtinger(spec.monomials, 4);
  auto fux = wirtinger(spec.monomials, 2);
  PeriodicGrid g(64);
  for (unsigned seed : {101u, 102u}) {
    auto U = make_doubled(random_smooth_field(g, 10, seed));
    auto J = state_jets(U);
    auto a2 = eval_monomials(fuxx, J);
    auto a1f = SpectralField::from_samples(g, eval_monomials(fux, J)) -
               spectral_derivative(SpectralField::from_samples(g, a2), 1);
    for (cd v : a2) rep.max_a2_imag = std::max(rep.max_a2_imag,
                                               std::abs(v.imag()));
    for (cd v : a1f.samples())
      rep.max_a1_real = std::max(rep.max_a1_real, std::abs(v.real()));
  }
  rep.ok = rep.symbolic_ok && rep.max_a2_imag < 1e-10 &&
           rep.max_a1_real < 1e-10;
  return rep;
}

struct ParityReport {
  bool ok = false;
  bool even_in_ux = false;       // f(z1, -z2, z3) = f(z1, z2, z3)
  bool real_uxx_derivative = false;  // d_uxx f closed under conjugate mirror
  bool symmetric_potential = false;
};

inline ParityReport check_parity(const NonlinearitySpec& spec,
                                 const PotentialSpec& pot) {
  ParityReport rep;
  rep.even_in_ux = true;
  for (const auto& m : spec.monomials)
    if ((m.exp[2] + m.exp[3]) % 2 != 0) rep.even_in_ux = false;
  auto g = wirtinger(spec.monomials, 4);
  rep.real_uxx_derivative = monomials_equal(g, mirror_monomials(g));
  rep.symmetric_potential = pot.symmetric_flag;
  rep.ok = rep.even_in_ux && rep.real_uxx_derivative &&
           rep.symmetric_potential;
  return rep;
}

struct EllipticityReport {
  bool ok = false;
  double margin1 = 0.0, margin2 = 0.0;  // min(1+Re a2), min((1+Re a2)^2-|b2|^2)
  double where1 = 0.0, where2 = 0.0;    // grid locations of the minima
  double c1 = 0.0, c2 = 0.0;
};

inline EllipticityReport check_ellipticity(const NonlinearitySpec& spec,
                                           const DoubledState& state,
                                           double c1 = 1e-3,
                                           double c2 = 1e-3) {
  auto J = state_jets(state);
  auto a2 = eval_monomials(wirtinger(spec.monomials, 4), J);
  auto b2 = eval_monomials(wirtinger(spec.monomials, 5), J);
  EllipticityReport rep;
  rep.c1 = c1;
  rep.c2 = c2;
  const auto& g = state.grid();
  for (int i = 0; i < g.n; ++i) {
    double q1 = 1.0 + a2[i].real();
    double q2 = q1 * q1 - std::norm(b2[i]);
    if (i == 0 || q1 < rep.margin1) {
      rep.margin1 = q1;
      rep.where1 = g.node(i);
    }
    if (i == 0 || q2 < rep.margin2) {
      rep.margin2 = q2;
      rep.where2 = g.node(i);
    }
  }
  rep.ok = rep.margin1 >= c1 && rep.margin2 >= c2;
  return rep;
}

}  // namespace paradiff
