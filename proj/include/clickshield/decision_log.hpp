#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <future>
#include <iosfwd>
#include <mutex>
#include <string>
#include <thread>

#include "clickshield/filter_engine.hpp"

namespace clickshield {

/// One audit-log row: the click, the verdict it got, and a sequence number
/// that increases strictly within a log file.
struct DecisionRecord {
  std::uint64_t seq = 0;
  ClickEvent click;
  Decision decision;
};

/// One-line JSON encoding (no trailing newline).
std::string to_json_line(const DecisionRecord& record);

/// Throws ParseError on malformed lines or missing fields.
DecisionRecord record_from_json_line(const std::string& line);

/// Append-only JSONL writer with one writer thread and a bounded queue.
///
/// Callers reserve a queue slot up front (back-pressure point, no state
/// mutated yet), then submit a record; the returned future resolves once
/// the line is written and flushed, which lets the service hold its
/// response until the record is durable. Slot reservation plus FIFO
/// submission keeps file order equal to sequence order.
class DecisionLogger {
public:
  explicit DecisionLogger(const std::string& path,
                          std::size_t queue_capacity = 1024);
  ~DecisionLogger();

  DecisionLogger(const DecisionLogger&) = delete;
  DecisionLogger& operator=(const DecisionLogger&) = delete;

  /// Reserve one queue slot; false on timeout (respond 503, nothing lost).
  bool try_acquire_slot(std::chrono::milliseconds timeout);

  /// Give back a slot reserved for a click that errored before submit.
  void release_slot();

  /// Consume a reserved slot: assign the next sequence number and enqueue.
  /// Call order defines sequence order, so callers serialize decide+submit.
  std::future<void> submit(const ClickEvent& click, const Decision& decision);

  std::uint64_t records_submitted() const;

  /// Drain the queue and stop the writer. Idempotent.
  void close();

private:
  struct Pending {
    std::string line;
    std::promise<void> done;
  };

  void writer_loop();

  std::ofstream out_;
  std::size_t capacity_;

  mutable std::mutex mutex_;
  std::condition_variable slot_available_;
  std::condition_variable work_available_;
  std::deque<Pending> queue_;
  std::size_t reserved_ = 0;
  std::uint64_t next_seq_ = 1;
  bool failed_ = false;
  bool closing_ = false;
  std::string failure_message_;

  std::thread writer_;
};

/// Outcome of re-deciding a recorded click stream.
struct ReplayResult {
  std::uint64_t records_replayed = 0;
  bool diverged = false;
  std::uint64_t first_divergence_seq = 0;
  std::string detail;  // field-level description of the first divergence
};

/// Feed every recorded click through `engine` (fresh, configured like the
/// recorder) and compare the recomputed decisions field by field. Stops at
/// the first divergence. Throws ParseError naming the offending line /
/// expected sequence number on corrupt input.
ReplayResult replay_log(std::istream& log, FilterEngine& engine);
ReplayResult replay_log_file(const std::string& path, FilterEngine& engine);

}  // namespace clickshield
