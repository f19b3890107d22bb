#pragma once

#include <arpa/inet.h>

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include "flowmob/error.hpp"

namespace flowmob {

/// 128-bit unsigned value in network order: `hi` holds the first 64 bits.
struct Bits128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend constexpr Bits128 operator&(Bits128 a, Bits128 b) { return {a.hi & b.hi, a.lo & b.lo}; }
  friend constexpr Bits128 operator|(Bits128 a, Bits128 b) { return {a.hi | b.hi, a.lo | b.lo}; }
  friend constexpr Bits128 operator~(Bits128 a) { return {~a.hi, ~a.lo}; }
  friend constexpr bool operator==(Bits128, Bits128) = default;
  friend constexpr auto operator<=>(Bits128, Bits128) = default;

  /// Mask with the leading `length` bits set.
  static constexpr Bits128 leading_ones(int length) {
    auto word = [](int n) -> std::uint64_t {
      if (n <= 0) return 0;
      if (n >= 64) return ~std::uint64_t{0};
      return ~std::uint64_t{0} << (64 - n);
    };
    return {word(length), word(length - 64)};
  }
};

/// An IPv6 prefix. Bits past `length` are always zero.
class Prefix {
 public:
  static constexpr int kDefaultLength = 48;

  Prefix() = default;

  Prefix(Bits128 bits, int length) : length_(length) {
    if (length < 1 || length > 128) {
      throw Error(ErrorCode::InvalidArgument,
                  "prefix length " + std::to_string(length) + " outside [1,128]");
    }
    bits_ = normalize(bits, length);
  }

  /// Parses "2001:db8:1::/48"; a missing "/len" means /128.
  static Prefix parse(std::string_view text) {
    std::string addr(text);
    int length = 128;
    if (auto slash = addr.find('/'); slash != std::string::npos) {
      try {
        std::size_t used = 0;
        length = std::stoi(addr.substr(slash + 1), &used);
        if (used != addr.size() - slash - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad prefix length in '" + std::string(text) + "'");
      }
      addr.resize(slash);
    }
    std::array<unsigned char, 16> raw{};
    if (inet_pton(AF_INET6, addr.c_str(), raw.data()) != 1) {
      throw Error(ErrorCode::InvalidArgument, "bad IPv6 address '" + std::string(text) + "'");
    }
    Bits128 bits;
    for (int i = 0; i < 8; ++i) {
      bits.hi = (bits.hi << 8) | raw[i];
      bits.lo = (bits.lo << 8) | raw[i + 8];
    }
    return Prefix(bits, length);
  }

  static constexpr Bits128 normalize(Bits128 bits, int length) {
    return bits & Bits128::leading_ones(length);
  }

  Bits128 bits() const { return bits_; }
  int length() const { return length_; }

  std::string to_string() const {
    std::array<unsigned char, 16> raw{};
    for (int i = 0; i < 8; ++i) {
      raw[i] = static_cast<unsigned char>(bits_.hi >> (56 - 8 * i));
      raw[i + 8] = static_cast<unsigned char>(bits_.lo >> (56 - 8 * i));
    }
    std::array<char, INET6_ADDRSTRLEN> buf{};
    inet_ntop(AF_INET6, raw.data(), buf.data(), buf.size());
    return std::string(buf.data()) + "/" + std::to_string(length_);
  }

  friend bool operator==(const Prefix&, const Prefix&) = default;
  friend auto operator<=>(const Prefix&, const Prefix&) = default;

 private:
  Bits128 bits_{};
  int length_ = 128;
};

enum class HnbpMode { ExactSet, OrMask };

inline std::string_view to_string(HnbpMode mode) {
  return mode == HnbpMode::ExactSet ? "exact" : "ormask";
}

inline HnbpMode parse_hnbp_mode(std::string_view text) {
  if (text == "exact" || text == "ExactSet") return HnbpMode::ExactSet;
  if (text == "ormask" || text == "OrMask") return HnbpMode::OrMask;
  throw Error(ErrorCode::InvalidArgument, "unknown HNBP mode '" + std::string(text) + "'");
}

/// Aggregate of a mobile node's home network prefixes, stored at MAGs so a
/// newly attached interface can be authorized without a binding round trip.
///
/// In OrMask mode `mask` is the bitwise OR of every contributing prefix; in
/// ExactSet mode `members` holds the prefixes themselves.
struct HomeNetworkBlockPrefix {
  HnbpMode mode = HnbpMode::ExactSet;
  std::set<Prefix> members;
  Prefix mask;
  std::uint64_t generation_time = 0;

  friend bool operator==(const HomeNetworkBlockPrefix&, const HomeNetworkBlockPrefix&) = default;

  std::string to_string() const {
    if (mode == HnbpMode::OrMask) return "or(" + mask.to_string() + ")";
    std::string out = "set(";
    bool first = true;
    for (const auto& p : members) {
      if (!first) out += " ";
      out += p.to_string();
      first = false;
    }
    return out + ")";
  }
};

}  // namespace flowmob
