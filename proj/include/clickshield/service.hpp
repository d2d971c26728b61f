#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "clickshield/decision_log.hpp"
#include "clickshield/filter_engine.hpp"

namespace clickshield {

struct ServiceConfig {
  std::string listen_address = "127.0.0.1:8080";  // host:port, port 0 = any
  std::string registry_path;
  double window_seconds = 0.0;  // required, no endorsed default
  double threshold = 0.01;
  std::uint64_t fallback_pool_size = 1;
  std::string decision_log_path;  // empty = logging disabled
  std::uint64_t ledger_capacity = 1u << 20;
  /// When > 0, a caller-supplied timestamp farther than this from server
  /// time is rejected (400). 0 trusts the caller, which replay-driven and
  /// simulation-driven ingestion need.
  double max_clock_skew_seconds = 0.0;

  void validate() const;
  EngineConfig engine_config() const;
};

/// HTTP front end for the filter on the billing path.
///
///   POST /clicks          {"source","dest","time"?} -> decision JSON
///   GET  /counters        accepted-click count per destination
///   POST /counters/reset  zero the billing counters
///   GET  /healthz
///
/// Every 200 click response is preceded by its decision-log append (when
/// logging is enabled); decide + log-sequence assignment happen under one
/// lock so the log replays to identical decisions.
class IngestService {
public:
  /// Loads the registry and opens the log; throws on any startup failure.
  explicit IngestService(ServiceConfig config);
  ~IngestService();

  IngestService(const IngestService&) = delete;
  IngestService& operator=(const IngestService&) = delete;

  /// Bind and serve on a background thread; throws IoError when the
  /// address is unavailable.
  void start();
  void stop();

  /// Port actually bound (resolves port 0).
  int port() const;
  const std::string& host() const;

  FilterEngine& engine();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace clickshield
