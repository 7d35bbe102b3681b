#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "paradiff/quantize.hpp"
#include "paradiff/sharp.hpp"

using namespace paradiff;

namespace {

SpectralField single_mode(const PeriodicGrid& g, int j, cd amp = cd(1.0)) {
  auto f = SpectralField::zero(g);
  f.at(j) = amp * sqrt_two_pi;  // samples amp * e^{ijx}
  return f;
}

SpectralField cos_field(const PeriodicGrid& g) {
  auto f = SpectralField::zero(g);
  f.at(1) = f.at(-1) = sqrt_two_pi / 2.0;
  return f;
}

SpectralField sin_field(const PeriodicGrid& g) {
  auto f = SpectralField::zero(g);
  f.at(1) = sqrt_two_pi / cd(0.0, 2.0);
  f.at(-1) = -sqrt_two_pi / cd(0.0, 2.0);
  return f;
}

double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
  return max_abs_coeff(a - b);
}

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

Eigen::VectorXcd to_vec(const SpectralField& u) {
  Eigen::VectorXcd v(u.n());
  for (int i = 0; i < u.n(); ++i) v(i) = u.coef[i];
  return v;
}

}  // namespace

TEST_CASE("Op(1) is the identity for every sigma") {
  PeriodicGrid g(64);
  auto one = multiplier_symbol(g, 0.0, XiProfile::monomial(0));
  auto u = random_smooth_field(g, 20, 5);
  for (double sigma : {0.0, 0.5, 1.0})
    CHECK(max_coeff_diff(op_quantize(one, sigma, u), u) < 1e-15);
  CHECK(max_coeff_diff(op_bony_weyl(one, make_cutoff(0.5), u), u) < 1e-15);
}

TEST_CASE("x-independent symbols are exact Fourier multipliers") {
  PeriodicGrid g(64);
  auto lap = multiplier_symbol(g, 2.0, XiProfile::monomial(2));
  auto e1 = single_mode(g, 1);
  for (double sigma : {0.0, 0.5, 1.0}) {
    auto out = op_quantize(lap, sigma, e1);
    CHECK(max_coeff_diff(out, cd(-1.0) * e1) < 1e-14);
  }
  // mode-by-mode, no cutoff loss for Bony-Weyl either
  auto dx = multiplier_symbol(g, 1.0, XiProfile::monomial(1));
  auto u = random_smooth_field(g, 30, 6);
  auto out = op_bony_weyl(dx, make_cutoff(0.5), u);
  double worst = 0.0;
  for (int k = g.mode_lo(); k <= g.mode_hi(); ++k)
    worst = std::max(worst, std::abs(out.at(k) - cd(0.0, k) * u.at(k)));
  CHECK(worst < 1e-12);
}

TEST_CASE("x-only symbols multiply pointwise") {
  PeriodicGrid g(64);
  auto a = make_symbol(0.0, single_mode(g, 1), XiProfile::monomial(0));
  auto u = random_smooth_field(g, 16, 7);
  auto want = SpectralField::from_samples(
      g, [&] {
        auto us = u.samples();
        for (int i = 0; i < g.n; ++i)
          us[i] *= std::exp(cd(0.0, g.node(i)));
        return us;
      }());
  for (double sigma : {0.5, 1.0})
    CHECK(max_coeff_diff(op_quantize(a, sigma, u), want) < 1e-12);
}

TEST_CASE("Bony-Weyl passes high modes and kills low ones") {
  PeriodicGrid g(256);
  auto a = make_symbol(0.0, single_mode(g, 1), XiProfile::monomial(0));
  auto chi = make_cutoff(0.5);

  auto hi = op_bony_weyl(a, chi, single_mode(g, 100));
  CHECK(max_coeff_diff(hi, single_mode(g, 101)) < 1e-13);

  auto lo = op_bony_weyl(a, chi, single_mode(g, 0));
  CHECK(max_abs_coeff(lo) == 0.0);
}

TEST_CASE("Bony-Weyl equals Weyl of the regularized symbol") {
  PeriodicGrid g(64);
  auto a = make_symbol(1.0, cos_field(g), XiProfile::monomial(1));
  auto chi = make_cutoff(0.5);
  auto u = random_smooth_field(g, 31, 8, 1.0);

  auto direct = op_bony_weyl(a, chi, u);
  auto via_reg = op_quantize(regularize(a, chi), 0.5, u);
  CHECK(max_coeff_diff(direct, via_reg) < 1e-12);

  // independent double sum for a = cos(x)(i xi): coefficients at m = +-1
  auto oracle = SpectralField::zero(g);
  for (int k = g.mode_lo(); k <= g.mode_hi(); ++k) {
    cd acc(0.0);
    for (int m : {-1, 1}) {
      int j = k - m;
      if (j < g.mode_lo() || j > g.mode_hi()) continue;
      double xi = 0.5 * (k + j);
      acc += chi.chi(m, xi) * 0.5 * cd(0.0, xi) * u.at(j);
    }
    oracle.at(k) = acc;
  }
  CHECK(max_coeff_diff(direct, oracle) < 1e-13);
}

TEST_CASE("dense matrices agree with the banded application") {
  PeriodicGrid g(64);
  auto sym = make_symbol(1.0, random_smooth_field(g, 8, 9),
                         XiProfile::monomial(1));
  sym.terms.push_back({random_smooth_field(g, 8, 10), XiProfile::monomial(0)});
  auto chi = make_cutoff(0.5);
  auto u = random_smooth_field(g, 31, 11, 1.0);

  Eigen::VectorXcd out_dense = dense_bony_weyl(sym, chi) * to_vec(u);
  auto out = op_bony_weyl(sym, chi, u);
  CHECK((out_dense - to_vec(out)).cwiseAbs().maxCoeff() < 1e-13);

  Eigen::VectorXcd q_dense = dense_quantize(sym, 0.5) * to_vec(u);
  auto q = op_quantize(sym, 0.5, u);
  CHECK((q_dense - to_vec(q)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("weyl_from_standard leaves multipliers alone") {
  PeriodicGrid g(64);
  auto sym = multiplier_symbol(g, 2.0, XiProfile::monomial(2));
  auto w = weyl_from_standard(sym);
  CHECK(symbol_distance(sym, w, {-9.0, 0.0, 1.5, 22.0}) < 1e-13);
}

TEST_CASE("weyl_from_standard reproduces the operator") {
  PeriodicGrid g(64);
  auto c = random_smooth_field(g, 8, 12);

  for (int kk : {1, 2}) {
    auto sym = make_symbol(kk, c, XiProfile::monomial(kk));
    auto w = weyl_from_standard(sym);
    auto M1 = dense_quantize(sym, 1.0);
    auto MW = dense_quantize(w, 0.5);
    CHECK((M1 - MW).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("weyl_from_standard order-by-order expansions") {
  PeriodicGrid g(64);
  auto c = random_smooth_field(g, 8, 13);

  // c(x)(i xi) -> c(x)(i xi) - c'(x)/2
  auto w1 = weyl_from_standard(make_symbol(1.0, c, XiProfile::monomial(1)));
  auto want1 = make_symbol(1.0, c, XiProfile::monomial(1));
  want1.terms.push_back(
      {cd(-0.5) * spectral_derivative(c, 1), XiProfile::monomial(0)});
  CHECK(symbol_distance(w1, want1, {-5.0, 0.0, 3.0, 17.0}) < 1e-12);

  // c(x)(i xi)^2 -> c(i xi)^2 - c'(i xi) + c''/4
  auto w2 = weyl_from_standard(make_symbol(2.0, c, XiProfile::monomial(2)));
  auto want2 = make_symbol(2.0, c, XiProfile::monomial(2));
  want2.terms.push_back(
      {cd(-1.0) * spectral_derivative(c, 1), XiProfile::monomial(1)});
  want2.terms.push_back(
      {cd(0.25) * spectral_derivative(c, 2), XiProfile::monomial(0)});
  CHECK(symbol_distance(w2, want2, {-5.0, 0.0, 3.0, 17.0}) < 1e-12);
}

TEST_CASE("weyl_from_standard translates tables") {
  PeriodicGrid g(64);
  auto c = random_smooth_field(g, 6, 14);
  auto p = XiProfile::table((double)g.n, [](double xi) { return cd(xi * xi); });
  auto sym = make_symbol(2.0, c, p);
  auto w = weyl_from_standard(sym);
  auto M1 = dense_quantize(sym, 1.0);
  auto MW = dense_quantize(w, 0.5);
  CHECK((M1 - MW).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("half-integer table lookup matches the monomial") {
  PeriodicGrid g(64);
  auto c = random_smooth_field(g, 8, 15);
  auto mono = make_symbol(1.0, c, XiProfile::monomial(1));
  auto tab = make_symbol(
      1.0, c, XiProfile::table((double)g.n, [](double xi) {
        return cd(0.0, xi);
      }));
  auto u = random_smooth_field(g, 20, 16);
  CHECK(max_coeff_diff(op_quantize(mono, 0.5, u), op_quantize(tab, 0.5, u)) <
        1e-12);
}

TEST_CASE("adjoint identity holds discretely") {
  PeriodicGrid g(64);
  auto chi = make_cutoff(0.5);

  auto lap = multiplier_symbol(g, 2.0, XiProfile::monomial(2));
  CHECK(adjoint_residual(lap, chi) < 1e-12);

  auto c = map_samples(random_smooth_field(g, 10, 17),
                       [](cd v) { return cd(v.real(), 0.0); });
  auto creal = make_symbol(0.0, c, XiProfile::monomial(0));
  CHECK(adjoint_residual(creal, chi) < 1e-10);
  CHECK(self_adjoint_residual(creal, chi) < 1e-10);

  // generic complex symbol: the identity is entrywise, not structural
  auto any = make_symbol(1.0, random_smooth_field(g, 10, 18),
                         XiProfile::monomial(1));
  CHECK(adjoint_residual(any, chi) < 1e-10);
}

TEST_CASE("imaginary symbols are anti-self-adjoint") {
  PeriodicGrid g(64);
  auto chi = make_cutoff(0.5);
  auto c = map_samples(random_smooth_field(g, 10, 19),
                       [](cd v) { return cd(v.real(), 0.0); });
  auto ic = make_symbol(0.0, cd(0.0, 1.0) * c, XiProfile::monomial(0));

  CHECK(adjoint_residual(ic, chi) < 1e-10);

  auto M = dense_bony_weyl(ic, chi);
  double nm = operator_norm(M);
  CHECK(self_adjoint_residual(ic, chi) == Catch::Approx(2.0 * nm).margin(1e-8));
  CHECK(operator_norm(LinearOperatorMatrix(M.adjoint() + M)) < 1e-10);
}

TEST_CASE("matrix_apply blocks and subspaces") {
  PeriodicGrid g(64);
  auto chi = make_cutoff(0.5);

  auto A0 = zero_matrix_symbol(g);
  auto s0 = make_doubled(random_smooth_field(g, 10, 20));
  auto z = matrix_apply(A0, chi, s0);
  CHECK(max_abs_coeff(z.plus) == 0.0);
  CHECK(max_abs_coeff(z.minus) == 0.0);

  MatrixSymbol lap{multiplier_symbol(g, 2.0, XiProfile::monomial(2)),
                   zero_symbol(g)};
  DoubledState pm{single_mode(g, 1), single_mode(g, -1)};
  auto out = matrix_apply(lap, chi, pm);
  CHECK(max_coeff_diff(out.plus, cd(-1.0) * pm.plus) < 1e-14);
  CHECK(max_coeff_diff(out.minus, cd(-1.0) * pm.minus) < 1e-14);
}

TEST_CASE("matrix_apply preserves the reality subspace") {
  PeriodicGrid g(64);
  auto chi = make_cutoff(0.5);
  MatrixSymbol A{make_symbol(1.0, random_smooth_field(g, 8, 21),
                             XiProfile::monomial(1)),
                 make_symbol(1.0, random_smooth_field(g, 8, 22),
                             XiProfile::monomial(1))};
  A.a.terms.push_back({random_smooth_field(g, 8, 23), XiProfile::monomial(0)});

  auto s = make_doubled(random_smooth_field(g, 12, 24));
  REQUIRE(check_subspace(s, Subspace::reality).ok);
  auto out = matrix_apply(A, chi, s);
  auto rep = check_subspace(out, Subspace::reality, 1e-12);
  CHECK(rep.ok);
  CHECK(rep.max_violation < 1e-12);
}

TEST_CASE("matrix_apply preserves parity for even symbols") {
  PeriodicGrid g(64);
  auto chi = make_cutoff(0.5);
  // a(x,xi) = cos(x)(i xi)^2 and b(x,xi) = sin(x)(i xi) satisfy
  // A(x,xi) = A(-x,-xi)
  MatrixSymbol A{make_symbol(2.0, cos_field(g), XiProfile::monomial(2)),
                 make_symbol(1.0, sin_field(g), XiProfile::monomial(1))};

  auto even = SpectralField::zero(g);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int j = 0; j <= 10; ++j) {
    cd v(dist(rng), dist(rng));
    even.at(j) = v;
    if (j > 0) even.at(-j) = v;
  }
  DoubledState s{even, even};
  REQUIRE(check_subspace(s, Subspace::parity).ok);

  auto out = matrix_apply(A, chi, s);
  auto rep = check_subspace(out, Subspace::parity, 1e-12);
  CHECK(rep.ok);
}

TEST_CASE("composition residual falls with rho") {
  PeriodicGrid g(64);
  auto a = make_symbol(1.0, random_smooth_field(g, 4, 11),
                       XiProfile::monomial(1));
  auto b = make_symbol(1.0, random_smooth_field(g, 4, 12),
                       XiProfile::monomial(1));
  auto probe = single_mode(g, 16, cd(1.0 / sqrt_two_pi));

  // plain Weyl: the l <= 2 expansion of order-(1,1) symbols is exact
  double rw[4];
  for (int rho = 1; rho <= 3; ++rho) {
    auto sh = sharp_product(a, b, rho);
    auto comp = op_quantize(a, 0.5, op_quantize(b, 0.5, probe));
    rw[rho] = sobolev_norm(comp - op_quantize(sh, 0.5, probe), 0.0);
  }
  CHECK(rw[2] < rw[1] / 20.0);
  CHECK(rw[3] < 1e-12);

  // Bony-Weyl at defaults: non-increasing up to the cutoff truncation floor
  auto chi = make_cutoff(0.5);
  double rb[4];
  for (int rho = 1; rho <= 3; ++rho) {
    auto sh = sharp_product(a, b, rho);
    auto comp = op_bony_weyl(a, chi, op_bony_weyl(b, chi, probe));
    rb[rho] = sobolev_norm(comp - op_bony_weyl(sh, chi, probe), 0.0);
  }
  CHECK(rb[2] < rb[1] / 5.0);
  CHECK(rb[3] < rb[2] * 1.05);

  // with the cutoff transparent on the active band the chain collapses
  auto wide = make_cutoff(0.9);
  auto probe24 = single_mode(g, 24, cd(1.0 / sqrt_two_pi));
  double rt[4];
  for (int rho = 1; rho <= 3; ++rho) {
    auto sh = sharp_product(a, b, rho);
    auto comp = op_bony_weyl(a, wide, op_bony_weyl(b, wide, probe24));
    rt[rho] = sobolev_norm(comp - op_bony_weyl(sh, wide, probe24), 0.0);
  }
  CHECK(rt[2] < rt[1] / 20.0);
  CHECK(rt[3] < 1e-12);
}

TEST_CASE("sigma validation") {
  PeriodicGrid g(32);
  auto one = multiplier_symbol(g, 0.0, XiProfile::monomial(0));
  auto u = random_smooth_field(g, 4, 1);
  CHECK_THROWS_AS(op_quantize(one, 0.3, u), parameter_error);
  CHECK_THROWS_AS(dense_quantize(one, 0.25), parameter_error);
}
