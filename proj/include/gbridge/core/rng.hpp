#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gbridge {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; the 64-bit stream index occupies the upper
/// half of the 128-bit counter, so every (seed, stream) pair is an
/// independent sequence of 2^64 blocks. Satisfies
/// UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Raw 4x32 block for counter `block` under `key`; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Variate generation on top of Philox. Distributions are implemented here
/// rather than via <random> so outputs do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept : engine_(seed, stream) {}

  /// Independent generator for replicate `index` of a batch seeded with `seed`.
  static Rng for_replicate(std::uint64_t seed, std::uint64_t index) noexcept {
    return Rng(seed, index);
  }

  std::uint64_t bits() noexcept { return engine_(); }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Exp(1).
  double exponential() noexcept;
  double normal() noexcept;
  /// Poisson(mean) by counting unit-rate arrivals; exact, O(mean) cost.
  std::uint64_t poisson(double mean) noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  Philox4x32& engine() noexcept { return engine_; }

 private:
  Philox4x32 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gbridge
