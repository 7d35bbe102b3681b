#pragma once

// Band-limited function on the torus, stored by Fourier coefficients in the
// convention of grid.hpp. Values are immutable after construction by usage
// convention; all operations return new fields.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "common.hpp"
#include "grid.hpp"

namespace paradiff {

struct SpectralField {
  PeriodicGrid grid;
  std::vector<cd> coef;  // index j + n/2

  SpectralField() = default;

  static SpectralField zero(const PeriodicGrid& g) {
    SpectralField f;
    f.grid = g;
    f.coef.assign(g.n, cd(0.0, 0.0));
    return f;
  }

  static SpectralField from_coeffs(const PeriodicGrid& g, std::vector<cd> c) {
    if ((int)c.size() != g.n)
      throw size_error("from_coeffs: expected " + std::to_string(g.n) +
                       " coefficients, got " + std::to_string(c.size()));
    SpectralField f;
    f.grid = g;
    f.coef = std::move(c);
    return f;
  }

  static SpectralField from_samples(const PeriodicGrid& g,
                                    const std::vector<cd>& s) {
    SpectralField f;
    f.grid = g;
    f.coef = fft_forward(g, s);
    return f;
  }

  std::vector<cd> samples() const { return fft_inverse(grid, coef); }

  cd at(int j) const { return coef[grid.index_of(j)]; }
  cd& at(int j) { return coef[grid.index_of(j)]; }
  int n() const { return grid.n; }
};

inline void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (a.grid != b.grid) throw size_error("fields live on different grids");
}

inline SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  SpectralField r = a;
  for (int i = 0; i < a.n(); ++i) r.coef[i] += b.coef[i];
  return r;
}

inline SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  SpectralField r = a;
  for (int i = 0; i < a.n(); ++i) r.coef[i] -= b.coef[i];
  return r;
}

inline SpectralField operator*(cd c, const SpectralField& f) {
  SpectralField r = f;
  for (auto& v : r.coef) v *= c;
  return r;
}

// ||u||_{H^s} = sqrt(sum <j>^{2s} |uhat(j)|^2)
inline double sobolev_norm(const SpectralField& f, double s) {
  double acc = 0.0;
  for (int j = f.grid.mode_lo(); j <= f.grid.mode_hi(); ++j) {
    double w = std::pow(bracket(j), 2.0 * s);
    acc += w * std::norm(f.at(j));
  }
  return std::sqrt(acc);
}

// uhat_out(j) = (ij)^order uhat(j); Nyquist forced to zero for order >= 1
inline SpectralField spectral_derivative(const SpectralField& f, int order) {
  if (order < 0 || order > 4)
    throw parameter_error("spectral_derivative: order must be 0..4");
  SpectralField r = f;
  if (order == 0) return r;
  for (int j = f.grid.mode_lo(); j <= f.grid.mode_hi(); ++j) {
    cd m = std::pow(cd(0.0, (double)j), order);
    r.at(j) = (j == f.grid.mode_lo()) ? cd(0.0) : m * f.at(j);
  }
  return r;
}

// uhat_out(j) = uhat(j)/(ij) for j != 0, uhat_out(0) = 0; requires zero mean
inline SpectralField antiderivative_zero_mean(const SpectralField& f,
                                              double mean_tolerance = 1e-10) {
  double m0 = std::abs(f.at(0));
  if (m0 >= mean_tolerance)
    throw precondition_error(
        "antiderivative_zero_mean: input has nonzero mean, |uhat(0)| = " +
            std::to_string(m0),
        m0);
  SpectralField r = f;
  for (int j = f.grid.mode_lo(); j <= f.grid.mode_hi(); ++j)
    r.at(j) = (j == 0) ? cd(0.0) : f.at(j) / cd(0.0, (double)j);
  return r;
}

// apply fn to the physical-space samples
inline SpectralField map_samples(const SpectralField& f,
                                 const std::function<cd(cd)>& fn) {
  auto s = f.samples();
  for (auto& v : s) v = fn(v);
  return SpectralField::from_samples(f.grid, s);
}

inline SpectralField map_samples2(const SpectralField& a, const SpectralField& b,
                                  const std::function<cd(cd, cd)>& fn) {
  require_same_grid(a, b);
  auto sa = a.samples(), sb = b.samples();
  for (int i = 0; i < a.n(); ++i) sa[i] = fn(sa[i], sb[i]);
  return SpectralField::from_samples(a.grid, sa);
}

inline SpectralField pointwise_multiply(const SpectralField& a,
                                        const SpectralField& b) {
  return map_samples2(a, b, [](cd x, cd y) { return x * y; });
}

// complex conjugate in physical space: uhat(j) -> conj(uhat(-j))
inline SpectralField conj_field(const SpectralField& f) {
  SpectralField r = SpectralField::zero(f.grid);
  for (int j = f.grid.mode_lo(); j <= f.grid.mode_hi(); ++j)
    r.at(j) = std::conj(f.at(f.grid.reflect(j)));
  return r;
}

// x -> -x: uhat(j) -> uhat(-j)
inline SpectralField reflect_field(const SpectralField& f) {
  SpectralField r = SpectralField::zero(f.grid);
  for (int j = f.grid.mode_lo(); j <= f.grid.mode_hi(); ++j)
    r.at(j) = f.at(f.grid.reflect(j));
  return r;
}

// trigonometric interpolation at an arbitrary point
inline cd evaluate(const SpectralField& f, double x) {
  cd acc(0.0);
  for (int j = f.grid.mode_lo(); j <= f.grid.mode_hi(); ++j)
    acc += f.at(j) * std::exp(cd(0.0, j * x));
  return acc / sqrt_two_pi;
}

inline cd integral(const SpectralField& f) { return sqrt_two_pi * f.at(0); }
inline cd mean(const SpectralField& f) { return f.at(0) / sqrt_two_pi; }

inline double max_abs_samples(const SpectralField& f) {
  double m = 0.0;
  for (const auto& v : f.samples()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_coeff(const SpectralField& f) {
  double m = 0.0;
  for (const auto& v : f.coef) m = std::max(m, std::abs(v));
  return m;
}

// random band-limited field with decaying coefficients, deterministic in seed
inline SpectralField random_smooth_field(const PeriodicGrid& g, int band,
                                         std::uint64_t seed,
                                         double decay = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  SpectralField f = SpectralField::zero(g);
  int b = std::min(band, g.n / 2 - 1);
  for (int j = -b; j <= b; ++j) {
    double w = std::pow(1.0 + std::abs(j), -decay);
    f.at(j) = w * cd(uni(rng), uni(rng));
  }
  return f;
}

}  // namespace paradiff
