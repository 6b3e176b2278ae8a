#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace raqmsim {

// Deterministic random source. All distributions are implemented explicitly
// on top of the raw mt19937_64 stream so that a given seed produces the same
// draw sequence on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(raw() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) {
      throw std::invalid_argument("uniform_below: n must be positive");
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = raw();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller. Draws two uniforms per call; no cached second value, so the
  // stream position after a call never depends on call history.
  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

  // Number of Bernoulli(p) trials up to and including the first success,
  // via inverse CDF. P(k) = (1-p)^(k-1) p, k >= 1.
  std::uint64_t geometric_trials(double p) {
    if (p <= 0.0 || p > 1.0) {
      throw std::invalid_argument("geometric_trials: p must be in (0, 1]");
    }
    if (p == 1.0) {
      uniform();  // keep stream consumption uniform across p
      return 1;
    }
    const double u = 1.0 - uniform();  // (0, 1]
    const double k = std::floor(std::log(u) / std::log1p(-p));
    return 1 + static_cast<std::uint64_t>(k < 0.0 ? 0.0 : k);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace raqmsim
