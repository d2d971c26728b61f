#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clickshield/ipv4.hpp"

namespace clickshield {

/// One accepted click retained in the statistics window.
struct LedgerEntry {
  Ipv4 source;
  std::string dest;    // non-empty, compared byte-exact
  std::string net_id;
  double time = 0.0;   // epoch seconds, >= 0
};

/// Length T of the statistics window.
struct WindowConfig {
  double seconds = 0.0;

  /// Throws std::invalid_argument unless seconds > 0 and finite.
  void validate() const;
};

/// Sliding-window multiset of accepted clicks.
///
/// Three structures share the entries: a min-heap on time drives eviction,
/// and two count maps answer the hot-path queries in O(1):
///   (net_id, dest)  -> retained click count
///   (source, dest)  -> retained click count (prior-click existence)
/// Entries are caller-timestamped; the ledger never reads a clock. Not
/// internally synchronized; FilterEngine serializes access.
class ClickLedger {
public:
  explicit ClickLedger(std::uint64_t capacity);

  /// Remove every entry with time < cutoff, returning how many went.
  /// Idempotent; tolerates cutoffs in any order.
  std::size_t evict_before(double cutoff);

  /// Retained clicks from `net_id` to `dest` (exact match on both).
  std::uint64_t count_net_dest(std::string_view net_id,
                               std::string_view dest) const;

  /// True iff at least one retained click has this (source, dest).
  bool has_prior(Ipv4 source, std::string_view dest) const;

  /// Store one entry (duplicates stay distinct rows). Throws CapacityError
  /// when the ledger is full and Error(InvalidArgument) on invalid entries.
  void record(LedgerEntry entry);

  std::size_t size() const noexcept { return by_time_.size(); }
  std::uint64_t capacity() const noexcept { return capacity_; }

private:
  struct LaterTime {
    bool operator()(const LedgerEntry& a, const LedgerEntry& b) const {
      return a.time > b.time;
    }
  };

  static std::string net_dest_key(std::string_view net_id,
                                  std::string_view dest);
  static std::string source_dest_key(Ipv4 source, std::string_view dest);

  std::priority_queue<LedgerEntry, std::vector<LedgerEntry>, LaterTime>
      by_time_;
  std::unordered_map<std::string, std::uint64_t> net_dest_counts_;
  std::unordered_map<std::string, std::uint64_t> source_dest_counts_;
  std::uint64_t capacity_;
};

}  // namespace clickshield
