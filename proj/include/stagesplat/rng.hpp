#pragma once

#include <cstdint>

namespace stagesplat {

/// SplitMix64 finalizer; the mixing step used for both the counter-based
/// hash and stream seeding.
std::uint64_t mix64(std::uint64_t x);

/// Stateless counter-based generator keyed by (seed, stream, counter).
/// Same key gives the same value on every platform.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// xoshiro256** stream. Distributions are implemented here rather than via
/// <random> so sequences do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, one cached spare).
  double normal();
  /// Derived independent stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stagesplat
