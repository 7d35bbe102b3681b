#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "paradiff/sharp.hpp"
#include "paradiff/symbol.hpp"

using namespace paradiff;

namespace {

SpectralField const_field(const PeriodicGrid& g, cd v) {
  auto f = SpectralField::zero(g);
  f.at(0) = v * sqrt_two_pi;
  return f;
}

SpectralField cos_field(const PeriodicGrid& g, double amp = 1.0, int mode = 1) {
  auto f = SpectralField::zero(g);
  f.at(mode) = f.at(-mode) = amp * sqrt_two_pi / 2.0;
  return f;
}

SpectralField sin_field(const PeriodicGrid& g, double amp = 1.0, int mode = 1) {
  auto f = SpectralField::zero(g);
  f.at(mode) = amp * sqrt_two_pi / cd(0.0, 2.0);
  f.at(-mode) = -amp * sqrt_two_pi / cd(0.0, 2.0);
  return f;
}

// worst difference of two symbols sampled on grid nodes and a few xi values
double symbol_distance(const DiscreteSymbol& a, const DiscreteSymbol& b,
                       const std::vector<double>& xis) {
  double worst = 0.0;
  for (double xi : xis) {
    auto sa = eval_on_grid(a, xi);
    auto sb = eval_on_grid(b, xi);
    for (size_t i = 0; i < sa.size(); ++i)
      worst = std::max(worst, std::abs(sa[i] - sb[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("cutoff support and monotonicity") {
  CHECK_THROWS_AS(make_cutoff(0.0), parameter_error);
  CHECK_THROWS_AS(make_cutoff(1.0), parameter_error);
  auto chi = make_cutoff(0.5);

  for (double xi : {-40.0, -3.0, 0.0, 7.5, 101.0})
    CHECK(chi.chi(0.0, xi) == 1.0);
  CHECK(chi.chi(10.0, 0.0) == 0.0);

  // transition band: strictly between 0 and 1, decreasing in |xi'|
  double xi = 8.0;
  double prev = 1.0;
  for (int k = 1; k <= 7; ++k) {
    double f = 0.25 + 0.25 * k / 8.0;
    double v = chi.chi(f * bracket(xi), xi);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(v < prev);
    prev = v;
  }
  // evenness
  CHECK(chi.chi(3.0, 5.0) == chi.chi(-3.0, 5.0));
  CHECK(chi.chi(3.0, 5.0) == chi.chi(3.0, -5.0));
}

TEST_CASE("profile evaluation and derivatives") {
  auto p2 = XiProfile::monomial(2);
  CHECK(std::abs(p2.eval(3.0) - cd(-9.0)) < 1e-14);
  // d/dxi (i xi)^2 = 2 i (i xi) = -2 xi
  CHECK(std::abs(p2.eval(3.0, 1) - cd(-6.0, 0.0)) < 1e-14);
  CHECK(std::abs(p2.eval(3.0, 2) - cd(-2.0, 0.0)) < 1e-14);

  auto tab = XiProfile::table(16.0, [](double xi) { return cd(xi * xi); });
  CHECK(std::abs(tab.eval(3.5) - cd(12.25)) < 1e-12);
  CHECK(std::abs(tab.eval(3.0, 1) - cd(6.0)) < 1e-10);
  CHECK(std::abs(tab.eval(3.0, 2) - cd(2.0)) < 1e-9);
}

TEST_CASE("regularize leaves constant-in-x symbols unchanged") {
  PeriodicGrid g(64);
  auto sym = multiplier_symbol(g, 2.0, XiProfile::monomial(2));
  auto reg = regularize(sym, make_cutoff(0.5));
  CHECK(symbol_distance(sym, reg, {-12.0, -1.0, 0.0, 0.5, 3.0, 20.0}) < 1e-13);
}

TEST_CASE("regularize kills high x-frequency at low xi") {
  PeriodicGrid g(64);
  const int N = 8;
  auto eN = SpectralField::zero(g);
  eN.at(N) = sqrt_two_pi;
  auto sym = make_symbol(0.0, eN, XiProfile::monomial(0));
  auto chi = make_cutoff(0.5);
  auto reg = regularize(sym, chi);

  // |8| >= delta <xi> for <xi> <= 16, i.e. for |xi| <= 15.9; those samples die
  CHECK(std::abs(series_coeff(reg, N, 0.0)) < 1e-15);
  CHECK(std::abs(series_coeff(reg, N, 10.0)) < 1e-15);
  // far above, chi = 1: coefficient survives untouched
  CHECK(std::abs(series_coeff(reg, N, 100.0) - series_coeff(sym, N, 100.0)) <
        1e-14);
}

TEST_CASE("regularize matches the per-mode oracle") {
  PeriodicGrid g(64);
  auto sym = make_symbol(2.0, cos_field(g), XiProfile::monomial(2));
  auto chi = make_cutoff(0.5);
  auto reg = regularize(sym, chi);
  double worst = 0.0;
  for (double xi : {0.0, 0.5, 1.5, 2.0, 4.5, 9.0, 31.0}) {
    for (int m = g.mode_lo(); m <= g.mode_hi(); ++m) {
      cd want = chi.chi(m, xi) * series_coeff(sym, m, xi);
      worst = std::max(worst, std::abs(series_coeff(reg, m, xi) - want));
    }
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("regularize is idempotent where chi is 0 or 1") {
  PeriodicGrid g(64);
  auto coeff = random_smooth_field(g, 12, 31);
  auto sym = make_symbol(1.0, coeff, XiProfile::monomial(1));
  auto chi = make_cutoff(0.5);
  auto once = regularize(sym, chi);
  auto twice = regularize(once, chi);
  double worst = 0.0;
  for (double xi : {0.0, 3.0, 17.0, 30.0}) {
    for (int m = g.mode_lo(); m <= g.mode_hi(); ++m) {
      double c = chi.chi(m, xi);
      if (c != 0.0 && c != 1.0) continue;
      worst = std::max(worst,
                       std::abs(series_coeff(twice, m, xi) -
                                series_coeff(once, m, xi)));
    }
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("sharp product at rho = 1 is the pointwise product") {
  PeriodicGrid g(64);
  auto a = make_symbol(1.0, random_smooth_field(g, 6, 1), XiProfile::monomial(1));
  auto b = make_symbol(1.0, random_smooth_field(g, 6, 2), XiProfile::monomial(1));
  auto ab = sharp_product(a, b, 1);

  double worst = 0.0;
  for (double xi : {-5.0, 0.0, 1.5, 8.0}) {
    auto sa = eval_on_grid(a, xi);
    auto sb = eval_on_grid(b, xi);
    auto sp = eval_on_grid(ab, xi);
    for (int i = 0; i < g.n; ++i)
      worst = std::max(worst, std::abs(sp[i] - sa[i] * sb[i]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("(i xi) sharp cos x at rho = 2") {
  PeriodicGrid g(64);
  auto a = multiplier_symbol(g, 1.0, XiProfile::monomial(1));
  auto b = make_symbol(0.0, cos_field(g), XiProfile::monomial(0));
  auto ab = sharp_product(a, b, 2);

  // expected cos(x)(i xi) - (1/2) sin x
  DiscreteSymbol want = make_symbol(1.0, cos_field(g), XiProfile::monomial(1));
  want.terms.push_back({cd(-0.5) * sin_field(g), XiProfile::monomial(0)});
  CHECK(symbol_distance(ab, want, {-7.0, -0.5, 0.0, 2.0, 13.0}) < 1e-13);
}

TEST_CASE("Poisson bracket from the rho = 2 commutator") {
  PeriodicGrid g(64);
  auto a = multiplier_symbol(g, 1.0, XiProfile::monomial(1));
  auto c = random_smooth_field(g, 8, 77);
  auto b = make_symbol(0.0, c, XiProfile::monomial(0));

  auto comm = sharp_product(a, b, 2);
  auto ba = sharp_product(b, a, 2);
  for (auto& t : ba.terms) comm.terms.push_back({cd(-1.0) * t.coeff, t.profile});

  auto want = make_symbol(0.0, spectral_derivative(c, 1), XiProfile::monomial(0));
  CHECK(symbol_distance(comm, want, {-9.0, 0.0, 1.0, 6.0}) < 1e-12);
}

TEST_CASE("sharp with a constant symbol is scaling, any rho") {
  PeriodicGrid g(64);
  auto k = multiplier_symbol(g, 0.0, XiProfile::monomial(0));
  for (auto& t : k.terms) t.coeff = cd(2.5, -0.5) * t.coeff;
  auto b = make_symbol(2.0, random_smooth_field(g, 9, 4), XiProfile::monomial(2));
  for (int rho : {1, 2, 3}) {
    auto kb = sharp_product(k, b, rho);
    auto bk = sharp_product(b, k, rho);
    DiscreteSymbol want = b;
    for (auto& t : want.terms) t.coeff = cd(2.5, -0.5) * t.coeff;
    CHECK(symbol_distance(kb, want, {0.0, 3.0, 11.0}) < 1e-12);
    CHECK(symbol_distance(bk, want, {0.0, 3.0, 11.0}) < 1e-12);
  }
}

TEST_CASE("l = 1 sharp term is antisymmetric") {
  PeriodicGrid g(64);
  auto a = make_symbol(1.0, random_smooth_field(g, 7, 10), XiProfile::monomial(1));
  auto b = make_symbol(1.0, random_smooth_field(g, 7, 11), XiProfile::monomial(1));

  // l = 1 part = (a#b)_2 - (a#b)_1
  auto ab2 = sharp_product(a, b, 2);
  auto ab1 = sharp_product(a, b, 1);
  auto ba2 = sharp_product(b, a, 2);
  auto ba1 = sharp_product(b, a, 1);

  double worst = 0.0;
  for (double xi : {-4.0, 0.5, 9.0}) {
    auto p = eval_on_grid(ab2, xi);
    auto q = eval_on_grid(ab1, xi);
    auto r = eval_on_grid(ba2, xi);
    auto s = eval_on_grid(ba1, xi);
    for (int i = 0; i < g.n; ++i) {
      cd l1_ab = p[i] - q[i];
      cd l1_ba = r[i] - s[i];
      worst = std::max(worst, std::abs(l1_ab + l1_ba));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("sharp product on table profiles stays consistent") {
  PeriodicGrid g(64);
  // gamma-like decaying table against a second-order monomial
  auto gam = XiProfile::table(g.n, [](double xi) {
    return std::abs(xi) >= 0.5 ? cd(1.0) / cd(0.0, xi)
                               : cd(0.0, 16.0 * xi * xi * xi - 8.0 * xi);
  });
  auto a = make_symbol(-1.0, cos_field(g), gam);
  auto b = multiplier_symbol(g, 2.0, XiProfile::monomial(2));
  auto ab = sharp_product(a, b, 1);
  double worst = 0.0;
  for (double xi : {1.0, 2.5, 8.0}) {
    auto sa = eval_on_grid(a, xi);
    auto sp = eval_on_grid(ab, xi);
    for (int i = 0; i < g.n; ++i)
      worst = std::max(worst, std::abs(sp[i] - sa[i] * cd(-xi * xi)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("sharp rho validation") {
  PeriodicGrid g(32);
  auto a = multiplier_symbol(g, 0.0, XiProfile::monomial(0));
  CHECK_THROWS_AS(sharp_product(a, a, 4), parameter_error);
  CHECK_THROWS_AS(sharp_product(a, a, 0), parameter_error);
}

TEST_CASE("symbol_exp of zero is the identity") {
  PeriodicGrid g(32);
  auto z = zero_matrix_symbol(g);
  z.b = make_symbol(0.0, SpectralField::zero(g), XiProfile::monomial(0));
  auto e = symbol_exp(z);
  auto ones = eval_on_grid(e.a, 0.0);
  for (auto& v : ones) CHECK(std::abs(v - cd(1.0)) < 1e-14);
  CHECK(symbol_is_zero(e.b, 1e-14));
}

TEST_CASE("symbol_exp of a real constant z") {
  PeriodicGrid g(32);
  auto m = zero_matrix_symbol(g);
  m.b = make_symbol(0.0, const_field(g, cd(0.3)), XiProfile::monomial(0));
  auto e = symbol_exp(m);
  auto c1 = eval_on_grid(e.a, 0.0);
  auto c2 = eval_on_grid(e.b, 0.0);
  for (int i = 0; i < g.n; ++i) {
    CHECK(std::abs(c1[i] - cd(std::cosh(0.3))) < 1e-13);
    CHECK(std::abs(c2[i] - cd(std::sinh(0.3))) < 1e-13);
  }
}

TEST_CASE("symbol_exp determinant is one for random smooth z") {
  PeriodicGrid g(64);
  auto m = zero_matrix_symbol(g);
  m.b = make_symbol(0.0, random_smooth_field(g, 10, 8), XiProfile::monomial(0));
  auto e = symbol_exp(m);
  auto c1 = eval_on_grid(e.a, 0.0);
  auto c2 = eval_on_grid(e.b, 0.0);
  double worst = 0.0;
  for (int i = 0; i < g.n; ++i) {
    // det of (c1, c2; conj c2, conj c1) with c1 real
    cd det = c1[i] * std::conj(c1[i]) - c2[i] * std::conj(c2[i]);
    worst = std::max(worst, std::abs(det - cd(1.0)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("symbol_exp(Z) symbol_exp(-Z) is the identity pointwise") {
  PeriodicGrid g(64);
  auto m = zero_matrix_symbol(g);
  m.b = make_symbol(0.0, random_smooth_field(g, 9, 15), XiProfile::monomial(0));
  auto e = symbol_exp(m);
  auto einv = symbol_exp(negate_matrix_symbol(m));

  auto a1 = eval_on_grid(e.a, 0.0), b1 = eval_on_grid(e.b, 0.0);
  auto a2 = eval_on_grid(einv.a, 0.0), b2 = eval_on_grid(einv.b, 0.0);
  double worst = 0.0;
  for (int i = 0; i < g.n; ++i) {
    // rows complete as (a, b; conj b, conj a); multiply the two matrices
    cd p11 = a1[i] * a2[i] + b1[i] * std::conj(b2[i]);
    cd p12 = a1[i] * b2[i] + b1[i] * std::conj(a2[i]);
    worst = std::max(worst, std::abs(p11 - cd(1.0)));
    worst = std::max(worst, std::abs(p12));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("symbol_exp diagonal case") {
  PeriodicGrid g(64);
  auto m = zero_matrix_symbol(g);
  auto s = random_smooth_field(g, 8, 23);
  m.a = make_symbol(0.0, s, XiProfile::monomial(0));
  auto e = symbol_exp(m);
  auto es = eval_on_grid(e.a, 0.0);
  auto ss = s.samples();
  for (int i = 0; i < g.n; ++i)
    CHECK(std::abs(es[i] - std::exp(ss[i])) < 1e-12);
  CHECK(symbol_is_zero(e.b, 1e-14));
}

TEST_CASE("symbol_exp rejects mixed and non-function input") {
  PeriodicGrid g(32);
  auto mixed = zero_matrix_symbol(g);
  mixed.a = make_symbol(0.0, const_field(g, cd(1.0)), XiProfile::monomial(0));
  mixed.b = make_symbol(0.0, const_field(g, cd(1.0)), XiProfile::monomial(0));
  CHECK_THROWS_AS(symbol_exp(mixed), structure_error);

  auto order1 = zero_matrix_symbol(g);
  order1.a = make_symbol(1.0, const_field(g, cd(1.0)), XiProfile::monomial(1));
  CHECK_THROWS_AS(symbol_exp(order1), structure_error);
}

TEST_CASE("conj_reflect_symbol") {
  PeriodicGrid g(64);
  auto c = random_smooth_field(g, 8, 41);
  auto sym = make_symbol(1.0, c, XiProfile::monomial(1));
  auto chk = conj_reflect_symbol(sym);
  // conj(c(x) (i(-xi))) = conj(c)(x) (i xi)
  double worst = 0.0;
  for (double xi : {-6.0, 0.5, 4.0}) {
    auto lhs = eval_on_grid(chk, xi);
    auto rhs = eval_on_grid(sym, -xi);
    for (int i = 0; i < g.n; ++i)
      worst = std::max(worst, std::abs(lhs[i] - std::conj(rhs[i])));
  }
  CHECK(worst < 1e-13);

  // table profile version
  auto tab = XiProfile::table(g.n, [](double xi) { return cd(xi, xi * xi); });
  auto symt = make_symbol(0.0, c, tab);
  auto chkt = conj_reflect_symbol(symt);
  worst = 0.0;
  for (double xi : {-3.0, 1.5, 7.0}) {
    auto lhs = eval_on_grid(chkt, xi);
    auto rhs = eval_on_grid(symt, -xi);
    for (int i = 0; i < g.n; ++i)
      worst = std::max(worst, std::abs(lhs[i] - std::conj(rhs[i])));
  }
  CHECK(worst < 1e-13);
}
