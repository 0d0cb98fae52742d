#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace holoray {

using complexd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Thrown when a configuration value is invalid (grid too small, h <= 0, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an argument violates a precondition of an operation.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when inputs fail a consistency check (rank mismatch, non-unitary map, impure mode).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown for operations that a given model does not support.
struct UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

// Counter-based generator: same (seed, counter) always yields the same stream,
// independent of call order elsewhere.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix(seed_, counter_++); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard complex Gaussian (Box-Muller).
  complexd gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t ctr) {
    // splitmix64 applied to seed ^ golden-ratio-scrambled counter
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (ctr + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace holoray
