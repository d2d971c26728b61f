#include "clickshield/filter_engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "clickshield/errors.hpp"

namespace clickshield {

std::string_view to_string(Outcome o) {
  return o == Outcome::Accept ? "ACCEPT" : "DISCARD";
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::FirstFromSource:
      return "FIRST_FROM_SOURCE";
    case Reason::RepeatBelowThresholdDiscarded:
      return "REPEAT_BELOW_THRESHOLD_DISCARDED";
    case Reason::RepeatAboveThresholdAccepted:
      return "REPEAT_ABOVE_THRESHOLD_ACCEPTED";
  }
  return "UNKNOWN";
}

void EngineConfig::validate() const {
  window.validate();
  if (!std::isfinite(threshold) || threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("threshold must be in (0, 1)");
  }
  if (ledger_capacity == 0) {
    throw std::invalid_argument("ledger_capacity must be >= 1");
  }
}

namespace {

EngineConfig checked(EngineConfig config) {
  config.validate();
  return config;
}

}  // namespace

FilterEngine::FilterEngine(EngineConfig config,
                           std::shared_ptr<const Registry> registry)
    : config_(checked(config)),
      registry_(std::move(registry)),
      ledger_(config.ledger_capacity),
      max_time_seen_(std::numeric_limits<double>::lowest()) {
  if (!registry_) {
    throw std::invalid_argument("registry must not be null");
  }
}

Decision FilterEngine::handle_click(const ClickEvent& click) {
  if (click.dest.empty()) {
    throw Error(ErrorCode::InvalidArgument, "click dest is empty");
  }
  if (!std::isfinite(click.time) || click.time < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "click time must be finite and >= 0");
  }

  const NetRange net = registry_->lookup(click.source);

  std::lock_guard lock(mutex_);

  if (click.time > max_time_seen_) max_time_seen_ = click.time;
  ledger_.evict_before(max_time_seen_ - config_.window.seconds);

  Decision decision;
  decision.net_id = net.net_id;
  decision.pool_size = net.pool_size;
  decision.observed_c = ledger_.count_net_dest(net.net_id, click.dest);
  decision.loss_bound = 0.5 * static_cast<double>(decision.observed_c) /
                        static_cast<double>(net.pool_size);

  const bool prior = ledger_.has_prior(click.source, click.dest);
  if (prior && decision.loss_bound < config_.threshold) {
    decision.outcome = Outcome::Discard;
    decision.reason = Reason::RepeatBelowThresholdDiscarded;
    return decision;  // no insert, no counter: discarded spam leaves no trace
  }

  // May throw CapacityError; the click is then neither counted nor recorded.
  ledger_.record({click.source, click.dest, net.net_id, click.time});
  ++counters_[click.dest];

  decision.outcome = Outcome::Accept;
  decision.reason = prior ? Reason::RepeatAboveThresholdAccepted
                          : Reason::FirstFromSource;
  return decision;
}

std::uint64_t FilterEngine::counter(std::string_view dest) const {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(std::string(dest));
  return it == counters_.end() ? 0 : it->second;
}

std::map<std::string, std::uint64_t> FilterEngine::counters() const {
  std::lock_guard lock(mutex_);
  return {counters_.begin(), counters_.end()};
}

void FilterEngine::reset_counters() {
  std::lock_guard lock(mutex_);
  counters_.clear();
}

}  // namespace clickshield
