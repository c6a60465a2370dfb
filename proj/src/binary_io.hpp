#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "acqlayout/error.hpp"

namespace acqlayout::detail {

template <typename T>
using UnsignedOf = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                   std::conditional_t<sizeof(T) == 2, std::uint16_t,
                   std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto bits = std::bit_cast<UnsignedOf<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
  }
  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void put_raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& buf) : buf_(buf) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    UnsignedOf<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<UnsignedOf<T>>(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    return get_raw(n);
  }
  std::string get_raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw Error(ErrorCode::CorruptHeader, "truncated binary file");
  }

  const std::vector<unsigned char>& buf_;
  std::size_t pos_ = 0;
};

}  // namespace acqlayout::detail
