#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace obsbound {

/// Seedable random stream with a fully documented mapping, so that outputs
/// are reproducible bit-for-bit across platforms:
///   - raw 64-bit words come from std::mt19937_64 (sequence fixed by the
///     C++ standard),
///   - uniform01() = (word >> 11) * 2^-53, giving doubles in [0, 1),
///   - gaussians use Box-Muller on consecutive uniform01() pairs (cosine
///     value returned first, sine value cached).
/// std::uniform_real_distribution and friends are deliberately avoided:
/// their word-to-double mapping is implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), u1<1
    const double angle = 2.0 * M_PI * u2;
    cached_ = r * std::sin(angle);
    has_cached_ = true;
    return r * std::cos(angle);
  }

  /// Complex with independent standard-normal real and imaginary parts.
  std::complex<double> complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re, im};
  }

  std::uint64_t word() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace obsbound
