#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace unicorn {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive combination of a seed with a sequence of stream keys.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> keys) noexcept;

/// Seedable pseudo-random source.
///
/// The engine is std::mt19937_64; the value transforms (uniform, normal,
/// integer-shape gamma) are written out here so that streams are identical
/// across standard library implementations.
///
/// Child streams are derived from (master seed, keys...) rather than from the
/// parent's state, so a session's stream does not depend on which sessions
/// were processed before it or on which worker processes it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_seed(master, keys));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal (Box-Muller, second variate cached).
  double normal();

  /// Gamma(shape, 1) for a positive integer shape, as a sum of exponentials.
  double gamma_integer(unsigned shape);

  /// Beta(a, b) for positive integer shapes.
  double beta_integer(unsigned a, unsigned b);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace unicorn
