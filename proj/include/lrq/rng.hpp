#pragma once

#include <cmath>
#include <cstdint>

namespace lrq {

// Counter-based generator: SplitMix64 (Steele, Lea, Flood 2014).
// The state advances by the golden-ratio increment and each output is the
// finalizer applied to the new state, so the k-th draw of a stream is a pure
// function of (stream seed, k). Sub-streams for ensemble members are derived
// as sub_seed = finalize(seed + GOLDEN_GAMMA * (realization_index + 1)),
// which keeps every realization reproducible from the top-level seed alone.
struct SplitMix64 {
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  static std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t next_u64() {
    state += kGamma;
    return finalize(state);
  }

  // Uniform on (0,1): 53-bit mantissa, offset by half an ulp so 0 is excluded.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Box-Muller pair from two uniforms; pairs are consumed in (cos, sin) order.
  void next_normal_pair(double& z0, double& z1) {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    z0 = r * std::cos(two_pi * u2);
    z1 = r * std::sin(two_pi * u2);
  }
};

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t realization_index) {
  return SplitMix64::finalize(seed + SplitMix64::kGamma * (realization_index + 1));
}

// Buffers the second Box-Muller deviate so single draws stay cheap.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double z0, z1;
    rng_.next_normal_pair(z0, z1);
    spare_ = z1;
    have_spare_ = true;
    return z0;
  }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lrq
