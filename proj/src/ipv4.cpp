#include "clickshield/ipv4.hpp"

#include <charconv>

#include "clickshield/errors.hpp"

namespace clickshield {

std::string Ipv4::to_string() const {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((value >> shift) & 0xffu);
    if (shift != 0) out += '.';
  }
  return out;
}

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet != 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || next == p || v > 255) return std::nullopt;
    // "01" style octets are ambiguous (octal readings); reject.
    if (next - p > 1 && *p == '0') return std::nullopt;
    p = next;
    value = (value << 8) | v;
  }
  if (p != end) return std::nullopt;
  return Ipv4{value};
}

Ipv4 Ipv4::parse_or_throw(std::string_view text) {
  auto ip = parse(text);
  if (!ip) {
    throw ParseError("invalid IPv4 address '" + std::string(text) + "'");
  }
  return *ip;
}

std::string Cidr::to_string() const {
  return base.to_string() + "/" + std::to_string(prefix_len);
}

Cidr Cidr::parse_or_throw(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw ParseError("invalid CIDR '" + std::string(text) +
                     "': missing '/'");
  }
  Cidr cidr;
  cidr.base = Ipv4::parse_or_throw(text.substr(0, slash));
  auto len_text = text.substr(slash + 1);
  unsigned len = 0;
  auto [next, ec] =
      std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (ec != std::errc{} || next != len_text.data() + len_text.size() ||
      len > 32) {
    throw ParseError("invalid CIDR '" + std::string(text) +
                     "': bad prefix length");
  }
  cidr.prefix_len = static_cast<std::uint8_t>(len);
  if ((cidr.base.value & ~cidr.mask()) != 0) {
    throw ParseError("invalid CIDR '" + std::string(text) +
                     "': host bits set");
  }
  return cidr;
}

}  // namespace clickshield
