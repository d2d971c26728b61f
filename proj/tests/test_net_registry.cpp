#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>
#include <random>
#include <vector>

#include "clickshield/errors.hpp"
#include "clickshield/net_registry.hpp"

using namespace clickshield;

namespace {

Ipv4 ip(const char* text) { return Ipv4::parse_or_throw(text); }

// Linear-scan longest-prefix match, the oracle for trie lookups.
std::optional<NetRange> naive_lookup(const std::vector<NetRange>& ranges,
                                     Ipv4 addr) {
  std::optional<NetRange> best;
  for (const auto& r : ranges) {
    if (r.cidr.contains(addr) &&
        (!best || r.cidr.prefix_len > best->cidr.prefix_len)) {
      best = r;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("IPv4 parsing is strict") {
  CHECK(ip("0.0.0.0").value == 0u);
  CHECK(ip("255.255.255.255").value == 0xffffffffu);
  CHECK(ip("10.1.2.3").value == 0x0a010203u);
  CHECK(ip("1.2.3.4").to_string() == "1.2.3.4");

  for (const char* bad : {"1.2.3", "1.2.3.4.5", "1.2.3.256", "1.2.3.04",
                          " 1.2.3.4", "1.2.3.4 ", "a.b.c.d", "", "1..2.3"}) {
    CAPTURE(bad);
    CHECK_FALSE(Ipv4::parse(bad).has_value());
  }
}

TEST_CASE("CIDR parsing enforces canonical form") {
  const Cidr c = Cidr::parse_or_throw("10.0.0.0/8");
  CHECK(c.prefix_len == 8);
  CHECK(c.address_count() == (1ull << 24));
  CHECK(c.contains(ip("10.200.1.1")));
  CHECK_FALSE(c.contains(ip("11.0.0.1")));
  CHECK(Cidr::parse_or_throw("0.0.0.0/0").address_count() == (1ull << 32));

  CHECK_THROWS_AS(Cidr::parse_or_throw("10.0.0.1/8"), ParseError);
  CHECK_THROWS_AS(Cidr::parse_or_throw("10.0.0.0/33"), ParseError);
  CHECK_THROWS_AS(Cidr::parse_or_throw("10.0.0.0"), ParseError);
}

TEST_CASE("registry file loading") {
  SUBCASE("default pool sizes come from the prefix length") {
    const auto reg = Registry::from_text(
        "10.0.0.0/8,netA\n10.1.0.0/16,netB\n", 1);
    CHECK(reg.size() == 2);
    CHECK(reg.lookup(ip("10.2.0.1")).pool_size == (1ull << 24));
    CHECK(reg.lookup(ip("10.1.2.3")).pool_size == (1ull << 16));
  }

  SUBCASE("explicit pool size wins") {
    const auto reg = Registry::from_text("10.0.0.0/8,netA,1000000\n", 1);
    CHECK(reg.lookup(ip("10.9.9.9")).pool_size == 1000000);
  }

  SUBCASE("comments, blank lines and whitespace are tolerated") {
    const auto reg = Registry::from_text(
        "# whois snapshot\n\n  10.0.0.0/8 , netA \n\n# tail\n", 7);
    CHECK(reg.size() == 1);
    CHECK(reg.lookup(ip("10.0.0.1")).net_id == "netA");
  }

  SUBCASE("duplicate CIDR is a conflict") {
    CHECK_THROWS_AS(
        Registry::from_text("10.0.0.0/8,netA\n10.0.0.0/8,netB\n", 1),
        ConflictError);
  }

  SUBCASE("malformed rows carry their line number") {
    try {
      Registry::from_text("10.0.0.0/8,netA\nnot-a-cidr,netB\n", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  SUBCASE("zero pool size is invalid") {
    CHECK_THROWS_AS(Registry::from_text("10.0.0.0/8,netA,0\n", 1), Error);
    CHECK_THROWS_AS(Registry::from_text("10.0.0.0/8,netA\n", 0), Error);
  }
}

TEST_CASE("lookup picks the longest matching prefix") {
  const auto reg =
      Registry::from_text("10.0.0.0/8,netA\n10.1.0.0/16,netB\n", 1);
  CHECK(reg.lookup(ip("10.1.2.3")).net_id == "netB");
  CHECK(reg.lookup(ip("10.2.0.1")).net_id == "netA");

  SUBCASE("lookup is repeatable") {
    const auto first = reg.lookup(ip("10.1.2.3"));
    const auto second = reg.lookup(ip("10.1.2.3"));
    CHECK(first.net_id == second.net_id);
    CHECK(first.pool_size == second.pool_size);
  }
}

TEST_CASE("unmatched IPs fall back to a synthetic /32") {
  const auto reg =
      Registry::from_text("10.0.0.0/8,netA\n10.1.0.0/16,netB\n", 1);
  const auto range = reg.lookup(ip("192.0.2.1"));
  CHECK(range.net_id == "192.0.2.1/32");
  CHECK(range.pool_size == 1);
  CHECK(range.cidr.prefix_len == 32);

  const auto reg9 = Registry::from_text("10.0.0.0/8,netA\n", 9);
  CHECK(reg9.lookup(ip("192.0.2.1")).pool_size == 9);
}

TEST_CASE("trie lookup matches a linear-scan oracle on random registries") {
  std::mt19937_64 gen(0x7e57u);
  for (int round = 0; round < 30; ++round) {
    std::vector<NetRange> ranges;
    std::string text;
    for (int i = 0; i < 60; ++i) {
      const auto prefix = static_cast<std::uint8_t>(gen() % 25);  // 0..24
      const std::uint32_t base =
          static_cast<std::uint32_t>(gen()) &
          (prefix == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix));
      NetRange r;
      r.cidr = Cidr{Ipv4{base}, prefix};
      r.net_id = "net" + std::to_string(i);
      r.pool_size = r.cidr.address_count();
      // Skip duplicates the generator happens to produce.
      bool dup = false;
      for (const auto& prev : ranges) {
        if (prev.cidr.base == r.cidr.base &&
            prev.cidr.prefix_len == r.cidr.prefix_len) {
          dup = true;
        }
      }
      if (dup) continue;
      ranges.push_back(r);
      text += r.cidr.to_string() + "," + r.net_id + "\n";
    }
    const auto reg = Registry::from_text(text, 3);

    for (int q = 0; q < 500; ++q) {
      const Ipv4 addr{static_cast<std::uint32_t>(gen())};
      const auto expected = naive_lookup(ranges, addr);
      const auto actual = reg.lookup(addr);
      CAPTURE(addr.to_string());
      if (expected) {
        REQUIRE(actual.net_id == expected->net_id);
        REQUIRE(actual.cidr.contains(addr));
      } else {
        REQUIRE(actual.pool_size == 3);
        REQUIRE(actual.cidr.prefix_len == 32);
      }
    }

    // Every loaded row is reachable through its own base address unless a
    // longer prefix shadows it.
    for (const auto& r : ranges) {
      const auto found = reg.lookup(r.cidr.base);
      const auto best = naive_lookup(ranges, r.cidr.base);
      REQUIRE(found.net_id == best->net_id);
    }
  }
}
