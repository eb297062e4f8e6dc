#pragma once

#include <cmath>
#include <cstdint>

namespace samtrack {

// splitmix64. Bit-exact across platforms; every stochastic quantity in the
// project flows through this generator so runs are reproducible from a seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller. Fixed draw count (two uniforms per pair), no rejection loop,
  // so the consumed stream length is a function of the call count alone.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Decorrelated child seed for a named purpose (weights, scene noise, ...).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt) {
  SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ull * (salt + 1ull)));
  return g.next();
}

}  // namespace samtrack
