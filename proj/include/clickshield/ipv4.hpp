#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace clickshield {

/// IPv4 address held in host byte order.
struct Ipv4 {
  std::uint32_t value = 0;

  auto operator<=>(const Ipv4&) const = default;

  std::string to_string() const;

  /// Strict dotted-quad parse: four decimal octets, 0-255, no leading zeros,
  /// no surrounding junk. Returns nullopt on any deviation.
  static std::optional<Ipv4> parse(std::string_view text);

  /// Parse that throws ParseError instead of returning nullopt.
  static Ipv4 parse_or_throw(std::string_view text);
};

/// CIDR block in canonical form (all host bits of `base` are zero).
struct Cidr {
  Ipv4 base;
  std::uint8_t prefix_len = 0;  // 0..32

  bool contains(Ipv4 ip) const {
    return (ip.value & mask()) == base.value;
  }

  std::uint32_t mask() const {
    return prefix_len == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_len);
  }

  /// Number of addresses covered: 2^(32 - prefix_len).
  std::uint64_t address_count() const {
    return std::uint64_t{1} << (32 - prefix_len);
  }

  std::string to_string() const;

  /// Parse "a.b.c.d/len". Rejects prefix lengths outside 0..32 and bases
  /// with host bits set.
  static Cidr parse_or_throw(std::string_view text);
};

}  // namespace clickshield
