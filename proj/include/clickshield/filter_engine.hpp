#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "clickshield/click_ledger.hpp"
#include "clickshield/ipv4.hpp"
#include "clickshield/net_registry.hpp"

namespace clickshield {

/// One incoming click.
struct ClickEvent {
  Ipv4 source;
  std::string dest;   // non-empty
  double time = 0.0;  // epoch seconds, >= 0
};

enum class Outcome { Accept, Discard };

enum class Reason {
  FirstFromSource,
  RepeatBelowThresholdDiscarded,
  RepeatAboveThresholdAccepted,
};

std::string_view to_string(Outcome o);
std::string_view to_string(Reason r);

/// Verdict for one click, with the inputs the threshold rule saw.
struct Decision {
  Outcome outcome = Outcome::Accept;
  Reason reason = Reason::FirstFromSource;
  std::uint64_t observed_c = 0;  // prior clicks from the net to this dest
  std::uint64_t pool_size = 0;
  double loss_bound = 0.0;       // 0.5 * observed_c / pool_size as evaluated
  std::string net_id;
};

struct EngineConfig {
  WindowConfig window;
  double threshold = 0.0;              // loss budget, in (0,1)
  std::uint64_t ledger_capacity = 0;   // back-pressure bound, >= 1

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// The per-click accept/discard pipeline: evict stale window history, look
/// up the source's net, count that net's clicks to the destination, and
/// discard a repeated click only while 0.5*C/A stays under the threshold.
/// Accepted clicks are counted per destination and become window history;
/// discarded clicks leave no trace.
///
/// All state mutates under one internal mutex, so any number of threads may
/// share an engine; each click is one serializable step.
class FilterEngine {
public:
  FilterEngine(EngineConfig config, std::shared_ptr<const Registry> registry);

  /// Throws CapacityError when an accept would overflow the ledger (the
  /// click is then neither counted nor recorded) and
  /// Error(InvalidArgument) on invalid events.
  Decision handle_click(const ClickEvent& click);

  /// Accepted-click count for dest since the last reset (0 if unseen).
  std::uint64_t counter(std::string_view dest) const;

  /// Snapshot of all non-zero counters, ordered by destination.
  std::map<std::string, std::uint64_t> counters() const;

  /// Zero all counters. Window history is billing-period independent and
  /// survives.
  void reset_counters();

  const EngineConfig& config() const noexcept { return config_; }

private:
  EngineConfig config_;
  std::shared_ptr<const Registry> registry_;

  mutable std::mutex mutex_;
  ClickLedger ledger_;
  std::unordered_map<std::string, std::uint64_t> counters_;
  // Eviction cutoff tracks the max timestamp seen, not the current click's:
  // a late-arriving old click must not resurrect evicted history.
  double max_time_seen_;
};

}  // namespace clickshield
