#pragma once

#include <cstdint>
#include <random>

namespace tesim {

/// SplitMix64 finalizer. Used to turn (master seed, path index) pairs into
/// well-separated stream seeds.
std::uint64_t splitmix64(std::uint64_t state);

/// Seed for the stream of a given path/role index under a master seed.
/// Stable across platforms and independent of worker scheduling.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Inverse standard normal CDF (Wichura's AS241 rational approximation,
/// accurate to ~1e-15 over (0, 1)). Throws std::domain_error outside (0, 1).
double inverse_normal_cdf(double p);

/// Deterministic random stream. Uniforms are built from the top 53 bits of a
/// mt19937_64 word and normals go through inverse_normal_cdf, so the numeric
/// sequence depends only on the seed, not on the standard library's
/// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform draw strictly inside (0, 1).
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal draw.
  double normal() { return inverse_normal_cdf(uniform01()); }

  /// Standard normal clamped to [-clip, clip].
  double clipped_normal(double clip) {
    double z = normal();
    if (z > clip) return clip;
    if (z < -clip) return -clip;
    return z;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tesim
