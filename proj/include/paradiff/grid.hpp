#pragma once

// Periodic grid on [0, 2pi) and the FFT bridge between samples and Fourier
// coefficients.
//
// Conventions, fixed once and used by every module:
//
//     u(x)    = (1/sqrt(2pi)) sum_j uhat(j) e^{ijx},   j = -n/2 .. n/2-1
//     uhat(j) = (sqrt(2pi)/n) sum_m u(x_m) e^{-ij x_m}
//
// so the constant function 1 has uhat(0) = sqrt(2pi). Coefficients are stored
// in increasing j with array index i = j + n/2. The mode j = -n/2 is the
// Nyquist mode; on the grid it aliases +n/2 and is its own reflection partner.

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "common.hpp"

namespace paradiff {

struct PeriodicGrid {
  int n = 0;

  PeriodicGrid() = default;
  explicit PeriodicGrid(int n_) : n(n_) {
    if (n < 8 || (n & (n - 1)) != 0)
      throw parameter_error("grid size must be a power of two >= 8, got " +
                            std::to_string(n));
  }

  int mode_lo() const { return -n / 2; }
  int mode_hi() const { return n / 2 - 1; }
  int index_of(int j) const { return j + n / 2; }
  // reflection j -> -j on stored modes; Nyquist is self-paired
  int reflect(int j) const { return j == -n / 2 ? j : -j; }
  double node(int m) const { return two_pi * m / n; }
  bool operator==(const PeriodicGrid& o) const { return n == o.n; }
  bool operator!=(const PeriodicGrid& o) const { return n != o.n; }
};

// One FFTW plan pair per grid size, created lazily under a lock. Plans use
// FFTW_ESTIMATE for run-to-run determinism and FFTW_UNALIGNED so the
// new-array execute interface accepts ordinary vector storage. Execution on
// distinct buffers is thread safe.
class FftPlans {
 public:
  static const FftPlans& get(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<FftPlans>> registry;
    std::lock_guard<std::mutex> lock(mu);
    auto it = registry.find(n);
    if (it == registry.end())
      it = registry.emplace(n, std::unique_ptr<FftPlans>(new FftPlans(n))).first;
    return *it->second;
  }

  void forward(cd* in, cd* out) const {
    fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }
  void backward(cd* in, cd* out) const {
    fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

 private:
  explicit FftPlans(int n) {
    std::vector<cd> a(n), b(n);
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()),
                            FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()),
                            FFTW_BACKWARD, flags);
  }

  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// samples (length n) -> coefficients in mode order
inline std::vector<cd> fft_forward(const PeriodicGrid& g,
                                   const std::vector<cd>& samples) {
  const int n = g.n;
  if ((int)samples.size() != n)
    throw size_error("fft_forward: expected " + std::to_string(n) +
                     " samples, got " + std::to_string(samples.size()));
  std::vector<cd> in(samples), dft(n), out(n);
  FftPlans::get(n).forward(in.data(), dft.data());
  const double scale = sqrt_two_pi / n;
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j)
    out[g.index_of(j)] = scale * dft[(j + n) % n];
  return out;
}

// coefficients in mode order -> samples (length n)
inline std::vector<cd> fft_inverse(const PeriodicGrid& g,
                                   const std::vector<cd>& coeffs) {
  const int n = g.n;
  if ((int)coeffs.size() != n)
    throw size_error("fft_inverse: expected " + std::to_string(n) +
                     " coefficients, got " + std::to_string(coeffs.size()));
  std::vector<cd> in(n), out(n);
  const double scale = 1.0 / sqrt_two_pi;
  for (int j = g.mode_lo(); j <= g.mode_hi(); ++j)
    in[(j + n) % n] = scale * coeffs[g.index_of(j)];
  FftPlans::get(n).backward(in.data(), out.data());
  return out;
}

}  // namespace paradiff
