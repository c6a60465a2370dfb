#include "acqlayout/fingerprint.hpp"

#include <array>
#include <cstdio>

namespace acqlayout {

namespace {
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
}

Fingerprint& Fingerprint::bytes(std::span<const std::byte> data) noexcept {
  for (std::byte b : data) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= kFnvPrime;
  }
  return *this;
}

Fingerprint& Fingerprint::text(std::string_view s) noexcept {
  integer(s.size());
  return bytes(std::as_bytes(std::span(s.data(), s.size())));
}

Fingerprint& Fingerprint::integer(std::uint64_t v) noexcept {
  std::array<std::byte, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
  return bytes(le);
}

std::string Fingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::uint64_t SplitMix::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % bound;
}

}  // namespace acqlayout
