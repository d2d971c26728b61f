#include "clickshield/click_ledger.hpp"

#include <cmath>
#include <stdexcept>

#include "clickshield/errors.hpp"

namespace clickshield {

void WindowConfig::validate() const {
  if (!std::isfinite(seconds) || seconds <= 0.0) {
    throw std::invalid_argument("window seconds must be finite and > 0");
  }
}

ClickLedger::ClickLedger(std::uint64_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw Error(ErrorCode::InvalidArgument, "ledger capacity must be >= 1");
  }
}

// Neither net ids nor dests can contain '\n' (both come from line-oriented
// inputs), so it is a safe join character.
std::string ClickLedger::net_dest_key(std::string_view net_id,
                                      std::string_view dest) {
  std::string key;
  key.reserve(net_id.size() + dest.size() + 1);
  key.append(net_id);
  key.push_back('\n');
  key.append(dest);
  return key;
}

std::string ClickLedger::source_dest_key(Ipv4 source, std::string_view dest) {
  std::string key;
  key.reserve(4 + dest.size());
  for (int shift = 24; shift >= 0; shift -= 8) {
    key.push_back(static_cast<char>((source.value >> shift) & 0xffu));
  }
  key.append(dest);
  return key;
}

std::size_t ClickLedger::evict_before(double cutoff) {
  std::size_t removed = 0;
  while (!by_time_.empty() && by_time_.top().time < cutoff) {
    const LedgerEntry& entry = by_time_.top();

    auto nd = net_dest_counts_.find(net_dest_key(entry.net_id, entry.dest));
    if (--nd->second == 0) net_dest_counts_.erase(nd);
    auto sd =
        source_dest_counts_.find(source_dest_key(entry.source, entry.dest));
    if (--sd->second == 0) source_dest_counts_.erase(sd);

    by_time_.pop();
    ++removed;
  }
  return removed;
}

std::uint64_t ClickLedger::count_net_dest(std::string_view net_id,
                                          std::string_view dest) const {
  auto it = net_dest_counts_.find(net_dest_key(net_id, dest));
  return it == net_dest_counts_.end() ? 0 : it->second;
}

bool ClickLedger::has_prior(Ipv4 source, std::string_view dest) const {
  return source_dest_counts_.contains(source_dest_key(source, dest));
}

void ClickLedger::record(LedgerEntry entry) {
  if (entry.dest.empty()) {
    throw Error(ErrorCode::InvalidArgument, "ledger entry dest is empty");
  }
  if (!std::isfinite(entry.time) || entry.time < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "ledger entry time must be finite and >= 0");
  }
  if (by_time_.size() >= capacity_) {
    throw CapacityError("ledger capacity " + std::to_string(capacity_) +
                        " exhausted");
  }
  ++net_dest_counts_[net_dest_key(entry.net_id, entry.dest)];
  ++source_dest_counts_[source_dest_key(entry.source, entry.dest)];
  by_time_.push(std::move(entry));
}

}  // namespace clickshield
