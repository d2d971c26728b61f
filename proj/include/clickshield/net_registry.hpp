#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "clickshield/ipv4.hpp"

namespace clickshield {

/// One registered network block and the size of its address pool.
struct NetRange {
  std::string net_id;
  Cidr cidr;
  std::uint64_t pool_size = 0;  // >= 1; defaults to cidr.address_count()
};

/// Immutable longest-prefix-match table over registered net ranges.
///
/// Lookups are total: an IP covered by no range resolves to a synthetic /32
/// range whose pool size is the configured fallback. Built once, then safe
/// for any number of concurrent readers.
class Registry {
public:
  /// Throws ConflictError on duplicate (base, prefix_len) and ParseError /
  /// Error(InvalidArgument) on invalid ranges.
  Registry(std::vector<NetRange> ranges, std::uint64_t fallback_pool_size);

  /// Parse registry text: one `CIDR,net_id[,pool_size]` row per line,
  /// `#`-prefixed and blank lines ignored. Errors carry 1-based line
  /// numbers.
  static Registry from_text(std::string_view text,
                            std::uint64_t fallback_pool_size);
  static Registry from_stream(std::istream& in,
                              std::uint64_t fallback_pool_size);
  static Registry from_file(const std::string& path,
                            std::uint64_t fallback_pool_size);

  /// Longest-prefix match; falls back to a synthetic /32 named after the
  /// address itself when nothing matches.
  NetRange lookup(Ipv4 ip) const;

  std::size_t size() const noexcept { return ranges_.size(); }
  std::uint64_t fallback_pool_size() const noexcept {
    return fallback_pool_size_;
  }
  const std::vector<NetRange>& ranges() const noexcept { return ranges_; }

private:
  // Binary trie over address bits, most significant first. Nodes live in a
  // flat vector; -1 marks absent children / no range terminating here.
  struct Node {
    std::int32_t child[2] = {-1, -1};
    std::int32_t range = -1;
  };

  void insert(std::size_t range_index);

  std::vector<Node> nodes_;
  std::vector<NetRange> ranges_;
  std::uint64_t fallback_pool_size_;
};

}  // namespace clickshield
