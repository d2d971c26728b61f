#include "clickshield.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "clickshield/decision_log.hpp"
#include "clickshield/errors.hpp"
#include "clickshield/filter_engine.hpp"
#include "clickshield/net_registry.hpp"
#include "clickshield/poisson_model.hpp"
#include "clickshield/service.hpp"
#include "clickshield/traffic_simulator.hpp"

using namespace clickshield;

extern "C" {

struct cs_registry {
  std::shared_ptr<const Registry> impl;
};

struct cs_engine {
  std::unique_ptr<FilterEngine> impl;
};

struct cs_service {
  std::unique_ptr<IngestService> impl;
};

}  // extern "C"

namespace {

thread_local std::string t_last_error;

cs_status set_error(cs_status status, const char* message) {
  t_last_error = message;
  return status;
}

cs_status from_exception() {
  try {
    throw;
  } catch (const Error& e) {
    t_last_error = e.what();
    switch (e.code()) {
      case ErrorCode::InvalidArgument:
        return CS_ERR_INVALID_ARGUMENT;
      case ErrorCode::Parse:
        return CS_ERR_PARSE;
      case ErrorCode::Conflict:
        return CS_ERR_CONFLICT;
      case ErrorCode::Capacity:
        return CS_ERR_CAPACITY;
      case ErrorCode::Io:
        return CS_ERR_IO;
      case ErrorCode::Divergence:
        return CS_ERR_DIVERGENCE;
      case ErrorCode::Internal:
        return CS_ERR_INTERNAL;
    }
    return CS_ERR_INTERNAL;
  } catch (const std::invalid_argument& e) {
    t_last_error = e.what();
    return CS_ERR_INVALID_ARGUMENT;
  } catch (const std::domain_error& e) {
    t_last_error = e.what();
    return CS_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return CS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return CS_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return CS_ERR_INTERNAL;
  }
}

cs_status require(bool ok, const char* message) {
  return ok ? CS_OK : set_error(CS_ERR_INVALID_ARGUMENT, message);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void copy_truncated(char* dst, size_t dst_len, const std::string& src) {
  if (dst == nullptr || dst_len == 0) return;
  const size_t n = std::min(dst_len - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

void fill_decision(cs_decision* out, const Decision& d) {
  out->outcome = d.outcome == Outcome::Accept ? CS_OUTCOME_ACCEPT
                                              : CS_OUTCOME_DISCARD;
  switch (d.reason) {
    case Reason::FirstFromSource:
      out->reason = CS_REASON_FIRST_FROM_SOURCE;
      break;
    case Reason::RepeatBelowThresholdDiscarded:
      out->reason = CS_REASON_REPEAT_BELOW_THRESHOLD_DISCARDED;
      break;
    case Reason::RepeatAboveThresholdAccepted:
      out->reason = CS_REASON_REPEAT_ABOVE_THRESHOLD_ACCEPTED;
      break;
  }
  out->observed_c = d.observed_c;
  out->pool_size = d.pool_size;
  out->loss_bound = d.loss_bound;
  copy_truncated(out->net_id, sizeof(out->net_id), d.net_id);
}

ServiceConfig to_service_config(const cs_service_config& c) {
  ServiceConfig cfg;
  if (c.listen_address != nullptr) cfg.listen_address = c.listen_address;
  if (c.registry_path != nullptr) cfg.registry_path = c.registry_path;
  cfg.window_seconds = c.window_seconds;
  cfg.threshold = c.threshold;
  cfg.fallback_pool_size = c.fallback_pool_size;
  if (c.decision_log_path != nullptr) {
    cfg.decision_log_path = c.decision_log_path;
  }
  cfg.ledger_capacity = c.ledger_capacity;
  cfg.max_clock_skew_seconds = c.max_clock_skew_seconds;
  return cfg;
}

}  // namespace

extern "C" {

const char* cs_version(void) { return "1.0.0"; }

const char* cs_status_name(cs_status status) {
  switch (status) {
    case CS_OK:
      return "CS_OK";
    case CS_ERR_INVALID_ARGUMENT:
      return "CS_ERR_INVALID_ARGUMENT";
    case CS_ERR_PARSE:
      return "CS_ERR_PARSE";
    case CS_ERR_CONFLICT:
      return "CS_ERR_CONFLICT";
    case CS_ERR_CAPACITY:
      return "CS_ERR_CAPACITY";
    case CS_ERR_IO:
      return "CS_ERR_IO";
    case CS_ERR_DIVERGENCE:
      return "CS_ERR_DIVERGENCE";
    case CS_ERR_INTERNAL:
      return "CS_ERR_INTERNAL";
  }
  return "CS_UNKNOWN";
}

const char* cs_last_error(void) { return t_last_error.c_str(); }

void cs_string_free(char* s) { delete[] s; }

cs_status cs_lambda(uint64_t pool_size, uint64_t clicks, double* out) {
  if (auto st = require(out != nullptr, "out is NULL")) return st;
  try {
    *out = lambda_of(ModelParams(pool_size, clicks)).value();
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_expected_repeats(double lambda, double* out) {
  if (auto st = require(out != nullptr, "out is NULL")) return st;
  try {
    *out = expected_repeats(Lambda(lambda));
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_expected_repeats_series(double lambda, uint32_t cutoff,
                                     double* out) {
  if (auto st = require(out != nullptr, "out is NULL")) return st;
  try {
    *out = expected_repeats_series(Lambda(lambda), cutoff);
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_loss_factor(uint64_t pool_size, uint64_t clicks, double* out) {
  if (auto st = require(out != nullptr, "out is NULL")) return st;
  try {
    *out = loss_factor(ModelParams(pool_size, clicks));
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_loss_upper_bound(uint64_t pool_size, uint64_t clicks,
                              double* out) {
  if (auto st = require(out != nullptr, "out is NULL")) return st;
  try {
    *out = loss_upper_bound(ModelParams(pool_size, clicks));
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_should_discard_repeat(uint64_t pool_size, uint64_t prior_clicks,
                                   double threshold, int* out_discard) {
  if (auto st = require(out_discard != nullptr, "out_discard is NULL")) {
    return st;
  }
  try {
    *out_discard =
        should_discard_repeat(ModelParams(pool_size, prior_clicks), threshold)
            ? 1
            : 0;
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_registry_load_file(const char* path, uint64_t fallback_pool_size,
                                cs_registry** out) {
  if (auto st = require(path != nullptr && out != nullptr,
                        "path/out is NULL")) {
    return st;
  }
  try {
    auto reg = std::make_shared<const Registry>(
        Registry::from_file(path, fallback_pool_size));
    *out = new cs_registry{std::move(reg)};
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_registry_load_text(const char* text, uint64_t fallback_pool_size,
                                cs_registry** out) {
  if (auto st = require(text != nullptr && out != nullptr,
                        "text/out is NULL")) {
    return st;
  }
  try {
    auto reg = std::make_shared<const Registry>(
        Registry::from_text(text, fallback_pool_size));
    *out = new cs_registry{std::move(reg)};
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

void cs_registry_free(cs_registry* registry) { delete registry; }

cs_status cs_registry_lookup(const cs_registry* registry, const char* ip,
                             char* net_id_buf, size_t net_id_buf_len,
                             uint64_t* pool_size) {
  if (auto st = require(registry != nullptr && ip != nullptr,
                        "registry/ip is NULL")) {
    return st;
  }
  try {
    const NetRange range = registry->impl->lookup(Ipv4::parse_or_throw(ip));
    copy_truncated(net_id_buf, net_id_buf_len, range.net_id);
    if (pool_size != nullptr) *pool_size = range.pool_size;
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_engine_new(const cs_engine_config* config, cs_registry* registry,
                        cs_engine** out) {
  if (auto st = require(config != nullptr && registry != nullptr &&
                            out != nullptr,
                        "config/registry/out is NULL")) {
    return st;
  }
  try {
    EngineConfig cfg;
    cfg.window.seconds = config->window_seconds;
    cfg.threshold = config->threshold;
    cfg.ledger_capacity = config->ledger_capacity;
    *out = new cs_engine{
        std::make_unique<FilterEngine>(cfg, registry->impl)};
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

void cs_engine_free(cs_engine* engine) { delete engine; }

cs_status cs_engine_handle_click(cs_engine* engine, const char* source_ip,
                                 const char* dest, double time,
                                 cs_decision* out) {
  if (auto st = require(engine != nullptr && source_ip != nullptr &&
                            dest != nullptr && out != nullptr,
                        "engine/source_ip/dest/out is NULL")) {
    return st;
  }
  try {
    const Decision d = engine->impl->handle_click(
        {Ipv4::parse_or_throw(source_ip), dest, time});
    fill_decision(out, d);
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_engine_counter(const cs_engine* engine, const char* dest,
                            uint64_t* out) {
  if (auto st = require(engine != nullptr && dest != nullptr && out != nullptr,
                        "engine/dest/out is NULL")) {
    return st;
  }
  try {
    *out = engine->impl->counter(dest);
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_engine_reset_counters(cs_engine* engine) {
  if (auto st = require(engine != nullptr, "engine is NULL")) return st;
  engine->impl->reset_counters();
  return CS_OK;
}

cs_status cs_engine_counters_json(const cs_engine* engine, char** out_json) {
  if (auto st = require(engine != nullptr && out_json != nullptr,
                        "engine/out_json is NULL")) {
    return st;
  }
  try {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [dest, count] : engine->impl->counters()) {
      j[dest] = count;
    }
    *out_json = dup_string(j.dump());
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_run_nat_scenario(const cs_nat_scenario* scenario, char** out_json,
                              char** out_csv) {
  if (auto st = require(scenario != nullptr, "scenario is NULL")) return st;
  try {
    NatScenario s;
    s.pool_size = scenario->pool_size;
    s.user_count = scenario->user_count;
    s.clicker_count = scenario->clicker_count;
    s.runs = scenario->runs;
    s.seed = scenario->seed;
    s.materialize_users = scenario->materialize_users != 0;
    s.threads = scenario->threads;

    const SimReport report = run_nat_scenario(s);
    if (out_json != nullptr) *out_json = dup_string(nat_report_json(s, report));
    if (out_csv != nullptr) *out_csv = dup_string(nat_report_csv(report));
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_run_attack_scenario(const cs_attack_scenario* scenario,
                                 const cs_engine_config* config,
                                 cs_registry* registry, char** out_json,
                                 char** out_csv) {
  if (auto st = require(scenario != nullptr && config != nullptr &&
                            registry != nullptr,
                        "scenario/config/registry is NULL")) {
    return st;
  }
  if (auto st = require(scenario->attacker_ip != nullptr &&
                            scenario->dest != nullptr,
                        "attacker_ip/dest is NULL")) {
    return st;
  }
  try {
    AttackScenario a;
    a.attacker_ip = Ipv4::parse_or_throw(scenario->attacker_ip);
    a.dest = scenario->dest;
    a.n_clicks = scenario->n_clicks;
    a.mean_interval_seconds = scenario->mean_interval_seconds;
    a.interval_jitter = scenario->interval_jitter;
    a.background_rate = scenario->background_rate;
    a.seed = scenario->seed;

    EngineConfig cfg;
    cfg.window.seconds = config->window_seconds;
    cfg.threshold = config->threshold;
    cfg.ledger_capacity = config->ledger_capacity;

    const AttackReport report =
        run_attack_scenario(a, cfg, registry->impl);
    if (out_json != nullptr) {
      *out_json = dup_string(attack_report_json(a, report));
    }
    if (out_csv != nullptr) *out_csv = dup_string(attack_report_csv(report));
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_service_start(const cs_service_config* config, cs_service** out) {
  if (auto st = require(config != nullptr && out != nullptr,
                        "config/out is NULL")) {
    return st;
  }
  try {
    auto service = std::make_unique<IngestService>(to_service_config(*config));
    service->start();
    *out = new cs_service{std::move(service)};
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

cs_status cs_service_port(const cs_service* service, int* out) {
  if (auto st = require(service != nullptr && out != nullptr,
                        "service/out is NULL")) {
    return st;
  }
  *out = service->impl->port();
  return CS_OK;
}

cs_status cs_service_stop(cs_service* service) {
  if (auto st = require(service != nullptr, "service is NULL")) return st;
  try {
    service->impl->stop();
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

void cs_service_free(cs_service* service) { delete service; }

cs_status cs_replay_log(const char* log_path, const cs_service_config* config,
                        cs_replay_result* out) {
  if (auto st = require(log_path != nullptr && config != nullptr &&
                            out != nullptr,
                        "log_path/config/out is NULL")) {
    return st;
  }
  try {
    const ServiceConfig cfg = to_service_config(*config);
    cfg.engine_config().validate();
    auto registry = std::make_shared<const Registry>(
        Registry::from_file(cfg.registry_path, cfg.fallback_pool_size));
    FilterEngine engine(cfg.engine_config(), registry);

    const ReplayResult result = replay_log_file(log_path, engine);
    out->records_replayed = result.records_replayed;
    out->diverged = result.diverged ? 1 : 0;
    out->first_divergence_seq = result.first_divergence_seq;
    copy_truncated(out->detail, sizeof(out->detail), result.detail);
    if (result.diverged) {
      return set_error(CS_ERR_DIVERGENCE, result.detail.c_str());
    }
    return CS_OK;
  } catch (...) {
    return from_exception();
  }
}

}  // extern "C"
