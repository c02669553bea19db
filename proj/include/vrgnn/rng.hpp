#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vrgnn {

/// SplitMix64 step. Used for seed derivation and split shuffling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a fixed label,
/// e.g. derive_seed(seed, "init").
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

/// Seeded generator for parameter init, reparameterization noise and dropout.
///
/// Normals use Box-Muller over our own uniform draws so sequences do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace vrgnn
