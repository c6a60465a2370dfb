#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace acqlayout {

/// Incremental FNV-1a (64 bit). Stable across platforms and runs, which is
/// what build fingerprints and seeded hashing need.
class Fingerprint {
 public:
  Fingerprint& bytes(std::span<const std::byte> data) noexcept;
  Fingerprint& text(std::string_view s) noexcept;

  template <typename T>
    requires std::is_arithmetic_v<T>
  Fingerprint& value(T v) noexcept {
    if constexpr (std::is_floating_point_v<T>) {
      // +0.0 and -0.0 hash alike
      const double d = static_cast<double>(v) == 0.0 ? 0.0 : static_cast<double>(v);
      return integer(std::bit_cast<std::uint64_t>(d));
    } else {
      return integer(static_cast<std::uint64_t>(v));
    }
  }

  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  Fingerprint& integer(std::uint64_t v) noexcept;

  std::uint64_t state_ = 14695981039346656037ull;
};

/// splitmix64 finalizer; turns correlated keys into well-mixed 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of a word.
constexpr double unit_interval(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Small deterministic generator (splitmix64 stream). Used wherever output
/// must not depend on the standard library's distribution implementations.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_ - 0x9e3779b97f4a7c15ull);
  }
  double uniform() noexcept { return unit_interval(next()); }
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace acqlayout
