#include "clickshield/decision_log.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "clickshield/errors.hpp"

namespace clickshield {

namespace {

Outcome outcome_from_string(const std::string& s, std::size_t line_no) {
  if (s == "ACCEPT") return Outcome::Accept;
  if (s == "DISCARD") return Outcome::Discard;
  throw ParseError("unknown outcome '" + s + "'", line_no);
}

Reason reason_from_string(const std::string& s, std::size_t line_no) {
  if (s == "FIRST_FROM_SOURCE") return Reason::FirstFromSource;
  if (s == "REPEAT_BELOW_THRESHOLD_DISCARDED") {
    return Reason::RepeatBelowThresholdDiscarded;
  }
  if (s == "REPEAT_ABOVE_THRESHOLD_ACCEPTED") {
    return Reason::RepeatAboveThresholdAccepted;
  }
  throw ParseError("unknown reason '" + s + "'", line_no);
}

DecisionRecord parse_record(const std::string& line, std::size_t line_no) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("malformed decision record", line_no);
  }
  try {
    DecisionRecord rec;
    rec.seq = j.at("seq").get<std::uint64_t>();
    rec.click.source =
        Ipv4::parse_or_throw(j.at("source").get<std::string>());
    rec.click.dest = j.at("dest").get<std::string>();
    rec.click.time = j.at("time").get<double>();
    rec.decision.net_id = j.at("net_id").get<std::string>();
    rec.decision.outcome =
        outcome_from_string(j.at("outcome").get<std::string>(), line_no);
    rec.decision.reason =
        reason_from_string(j.at("reason").get<std::string>(), line_no);
    rec.decision.observed_c = j.at("observed_c").get<std::uint64_t>();
    rec.decision.pool_size = j.at("pool_size").get<std::uint64_t>();
    rec.decision.loss_bound = j.at("loss_bound").get<double>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad decision record: ") + e.what(),
                     line_no);
  }
}

}  // namespace

std::string to_json_line(const DecisionRecord& record) {
  nlohmann::json j{
      {"seq", record.seq},
      {"time", record.click.time},
      {"source", record.click.source.to_string()},
      {"dest", record.click.dest},
      {"net_id", record.decision.net_id},
      {"outcome", to_string(record.decision.outcome)},
      {"reason", to_string(record.decision.reason)},
      {"observed_c", record.decision.observed_c},
      {"pool_size", record.decision.pool_size},
      {"loss_bound", record.decision.loss_bound},
  };
  return j.dump();
}

DecisionRecord record_from_json_line(const std::string& line) {
  return parse_record(line, 0);
}

DecisionLogger::DecisionLogger(const std::string& path,
                               std::size_t queue_capacity)
    : capacity_(queue_capacity == 0 ? 1 : queue_capacity) {
  // Appending to an existing log continues its sequence, keeping seq
  // strictly increasing within the file across restarts.
  {
    std::ifstream existing(path);
    std::string line;
    std::string last;
    while (std::getline(existing, line)) {
      if (!line.empty()) last = std::move(line);
    }
    if (!last.empty()) {
      next_seq_ = record_from_json_line(last).seq + 1;
    }
  }
  out_.open(path, std::ios::out | std::ios::app);
  if (!out_) {
    throw IoError("cannot open decision log '" + path + "' for append");
  }
  writer_ = std::thread([this] { writer_loop(); });
}

DecisionLogger::~DecisionLogger() { close(); }

bool DecisionLogger::try_acquire_slot(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!slot_available_.wait_for(lock, timeout, [this] {
        return failed_ || closing_ ||
               queue_.size() + reserved_ < capacity_;
      })) {
    return false;
  }
  if (failed_ || closing_) return false;
  ++reserved_;
  return true;
}

void DecisionLogger::release_slot() {
  std::lock_guard lock(mutex_);
  if (reserved_ > 0) --reserved_;
  slot_available_.notify_one();
}

std::future<void> DecisionLogger::submit(const ClickEvent& click,
                                         const Decision& decision) {
  std::lock_guard lock(mutex_);
  if (reserved_ == 0) {
    throw Error(ErrorCode::Internal, "submit without a reserved slot");
  }
  --reserved_;
  if (failed_) {
    std::promise<void> p;
    p.set_exception(std::make_exception_ptr(IoError(failure_message_)));
    slot_available_.notify_one();
    return p.get_future();
  }
  DecisionRecord record{next_seq_++, click, decision};
  queue_.emplace_back();
  queue_.back().line = to_json_line(record);
  auto fut = queue_.back().done.get_future();
  work_available_.notify_one();
  return fut;
}

std::uint64_t DecisionLogger::records_submitted() const {
  std::lock_guard lock(mutex_);
  return next_seq_ - 1;
}

void DecisionLogger::close() {
  {
    std::lock_guard lock(mutex_);
    closing_ = true;
    work_available_.notify_one();
    slot_available_.notify_all();
  }
  if (writer_.joinable()) writer_.join();
}

void DecisionLogger::writer_loop() {
  for (;;) {
    Pending item;
    {
      std::unique_lock lock(mutex_);
      work_available_.wait(lock,
                           [this] { return closing_ || !queue_.empty(); });
      if (queue_.empty()) {
        if (closing_) return;
        continue;
      }
      item = std::move(queue_.front());
      queue_.pop_front();
      slot_available_.notify_one();
    }
    out_ << item.line << '\n';
    out_.flush();
    if (!out_) {
      std::lock_guard lock(mutex_);
      failed_ = true;
      failure_message_ = "decision log write failed";
      item.done.set_exception(
          std::make_exception_ptr(IoError(failure_message_)));
      continue;
    }
    item.done.set_value();
  }
}

ReplayResult replay_log(std::istream& log, FilterEngine& engine) {
  ReplayResult result;
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t prev_seq = 0;
  while (std::getline(log, line)) {
    ++line_no;
    if (line.empty()) continue;
    DecisionRecord rec = parse_record(line, line_no);
    if (rec.seq <= prev_seq) {
      throw ParseError("sequence number " + std::to_string(rec.seq) +
                           " not strictly increasing (previous " +
                           std::to_string(prev_seq) + ")",
                       line_no);
    }
    prev_seq = rec.seq;

    Decision actual = engine.handle_click(rec.click);
    ++result.records_replayed;

    auto diverge = [&](const std::string& field, const std::string& logged,
                       const std::string& recomputed) {
      result.diverged = true;
      result.first_divergence_seq = rec.seq;
      result.detail = "seq " + std::to_string(rec.seq) + ": " + field +
                      " logged=" + logged + " recomputed=" + recomputed;
    };

    const Decision& want = rec.decision;
    if (actual.outcome != want.outcome) {
      diverge("outcome", std::string(to_string(want.outcome)),
              std::string(to_string(actual.outcome)));
    } else if (actual.reason != want.reason) {
      diverge("reason", std::string(to_string(want.reason)),
              std::string(to_string(actual.reason)));
    } else if (actual.observed_c != want.observed_c) {
      diverge("observed_c", std::to_string(want.observed_c),
              std::to_string(actual.observed_c));
    } else if (actual.pool_size != want.pool_size) {
      diverge("pool_size", std::to_string(want.pool_size),
              std::to_string(actual.pool_size));
    } else if (actual.loss_bound != want.loss_bound) {
      diverge("loss_bound", std::to_string(want.loss_bound),
              std::to_string(actual.loss_bound));
    } else if (actual.net_id != want.net_id) {
      diverge("net_id", want.net_id, actual.net_id);
    }
    if (result.diverged) break;
  }
  return result;
}

ReplayResult replay_log_file(const std::string& path, FilterEngine& engine) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open decision log '" + path + "'");
  }
  return replay_log(in, engine);
}

}  // namespace clickshield
