#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace fibrescan {

/// Counter-based random stream keyed by (seed, stream index).
///
/// The k-th draw is a bijective 64-bit mix of key + k * gamma (the SplitMix64
/// output function), so a stream is fully determined by its key and position.
/// split() derives child keys; per-block and per-task streams therefore
/// reproduce under any thread schedule. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  /// Independent child stream; the parent is not advanced.
  [[nodiscard]] RandomStream split(std::uint64_t index) const noexcept;
  /// Child stream for a named purpose ("simulate", "marks", "copy", ...).
  [[nodiscard]] RandomStream split(std::string_view name) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_positive() noexcept { return 1.0 - uniform(); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  std::uint64_t poisson(double mean);

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

private:
  struct Key {
    std::uint64_t value;
  };
  explicit RandomStream(Key key) noexcept : key_(key.value) {}

  std::uint64_t key_;
  std::uint64_t counter_{0};
};

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace fibrescan
