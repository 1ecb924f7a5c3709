#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "liquidbeam/complex_matrix.hpp"

namespace lb {

/// Counter-based deterministic generator. A stream is fully determined by its
/// key, so any (seed, slot, user) stream can be opened in isolation without
/// generating earlier slots. Draws are splitmix64 outputs over a Weyl
/// sequence starting at the mixed key.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : state_(mix(key ^ 0x6A09E667F3BCC909ull)) {}

  /// Key derivation for independent (seed, slot, user) streams.
  static CounterRng keyed(std::uint64_t seed, std::uint64_t slot, std::uint64_t user) {
    std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ull);
    k = mix(k ^ (slot * 0xBF58476D1CE4E5B9ull + 1));
    k = mix(k ^ (user * 0x94D049BB133111EBull + 1));
    return CounterRng(k);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller (fixed two-draw cost, no rejection, so
  /// the draw count per call is reproducible).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Standard complex normal CN(0,1): real and imaginary parts N(0, 1/2).
  std::complex<double> complex_normal() {
    const double s = std::sqrt(0.5);
    const double re = s * normal();
    const double im = s * normal();
    return {re, im};
  }

  /// Matrix with i.i.d. CN(0, variance) entries.
  ComplexMatrix complex_gaussian_matrix(std::size_t rows, std::size_t cols,
                                        double variance = 1.0) {
    ComplexMatrix g(rows, cols);
    const double s = std::sqrt(variance);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto z = complex_normal();
      g.re_data()[i] = s * z.real();
      g.im_data()[i] = s * z.imag();
    }
    return g;
  }

  static constexpr double kPi = 3.14159265358979323846;

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lb
