#pragma once

#include <cstdint>
#include <random>

namespace imgrid {

/// Derives an independent stream seed from a base seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Seeded generator with explicit sampling primitives so the number of raw
/// draws per call is fixed and reproducible across platforms.
class RandomEngine {
 public:
  explicit RandomEngine(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1). Consumes one raw draw.
  double uniform();

  /// Standard normal via Box-Muller. Consumes exactly two raw draws.
  double normal();

  /// Uniform integer in [0, n). Rejection-sampled, n must be positive.
  int uniform_int(int n);

 private:
  std::mt19937_64 gen_;
};

}  // namespace imgrid
