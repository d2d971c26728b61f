/*
 * clickshield — click-spam protection for pay-per-click accounting.
 *
 * C API over the C++ core: opaque handles, status codes, and a
 * thread-local last-error message. All strings are NUL-terminated UTF-8.
 * Strings returned through char** outputs are heap-allocated; free them
 * with cs_string_free().
 */
#ifndef CLICKSHIELD_H
#define CLICKSHIELD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cs_status {
  CS_OK = 0,
  CS_ERR_INVALID_ARGUMENT = 1,
  CS_ERR_PARSE = 2,
  CS_ERR_CONFLICT = 3,
  CS_ERR_CAPACITY = 4,
  CS_ERR_IO = 5,
  CS_ERR_DIVERGENCE = 6,
  CS_ERR_INTERNAL = 7
} cs_status;

const char* cs_version(void);
const char* cs_status_name(cs_status status);

/* Message for the most recent failing call on the calling thread. */
const char* cs_last_error(void);

void cs_string_free(char* s);

/* -------- statistics model -------- */

/* lambda = clicks / pool_size. pool_size >= 1. */
cs_status cs_lambda(uint64_t pool_size, uint64_t clicks, double* out);

/* Mean repeated clicks per window at intensity lambda:
 * lambda + e^{-lambda} - 1. */
cs_status cs_expected_repeats(double lambda, double* out);

/* Truncated-series route to the same quantity (independent check);
 * cutoff >= 2. */
cs_status cs_expected_repeats_series(double lambda, uint32_t cutoff,
                                     double* out);

/* Expected fraction of genuine clicks lost when every repeat from the net
 * is dropped. clicks >= 1. */
cs_status cs_loss_factor(uint64_t pool_size, uint64_t clicks, double* out);

/* First-order ceiling 0.5 * clicks / pool_size. */
cs_status cs_loss_upper_bound(uint64_t pool_size, uint64_t clicks,
                              double* out);

/* Threshold rule for a repeated click, prior_clicks counting earlier
 * retained clicks only. threshold in (0,1). *out_discard is 1 to discard,
 * 0 to accept. */
cs_status cs_should_discard_repeat(uint64_t pool_size, uint64_t prior_clicks,
                                   double threshold, int* out_discard);

/* -------- net registry -------- */

typedef struct cs_registry cs_registry;

/* Registry text: one `CIDR,net_id[,pool_size]` row per line; `#` comments
 * and blank lines ignored. pool_size defaults to the CIDR block size.
 * Unmatched IPs resolve to a synthetic /32 with fallback_pool_size. */
cs_status cs_registry_load_file(const char* path, uint64_t fallback_pool_size,
                                cs_registry** out);
cs_status cs_registry_load_text(const char* text, uint64_t fallback_pool_size,
                                cs_registry** out);
void cs_registry_free(cs_registry* registry);

/* Longest-prefix match. net_id_buf receives the net id (truncated if the
 * buffer is too small, always NUL-terminated); either output may be NULL. */
cs_status cs_registry_lookup(const cs_registry* registry, const char* ip,
                             char* net_id_buf, size_t net_id_buf_len,
                             uint64_t* pool_size);

/* -------- filter engine -------- */

typedef struct cs_engine cs_engine;

typedef struct cs_engine_config {
  double window_seconds;    /* statistics window T, > 0 */
  double threshold;         /* loss budget, in (0,1) */
  uint64_t ledger_capacity; /* window back-pressure bound, >= 1 */
} cs_engine_config;

typedef enum cs_outcome {
  CS_OUTCOME_ACCEPT = 0,
  CS_OUTCOME_DISCARD = 1
} cs_outcome;

typedef enum cs_reason {
  CS_REASON_FIRST_FROM_SOURCE = 0,
  CS_REASON_REPEAT_BELOW_THRESHOLD_DISCARDED = 1,
  CS_REASON_REPEAT_ABOVE_THRESHOLD_ACCEPTED = 2
} cs_reason;

typedef struct cs_decision {
  cs_outcome outcome;
  cs_reason reason;
  uint64_t observed_c;
  uint64_t pool_size;
  double loss_bound;
  char net_id[128]; /* truncated if longer */
} cs_decision;

/* The engine keeps its own reference to the registry; the caller's handle
 * stays valid and may be freed independently. */
cs_status cs_engine_new(const cs_engine_config* config, cs_registry* registry,
                        cs_engine** out);
void cs_engine_free(cs_engine* engine);

/* Decide one click. CS_ERR_CAPACITY means the window is full and the click
 * was neither counted nor recorded. Thread-safe. */
cs_status cs_engine_handle_click(cs_engine* engine, const char* source_ip,
                                 const char* dest, double time,
                                 cs_decision* out);

cs_status cs_engine_counter(const cs_engine* engine, const char* dest,
                            uint64_t* out);
cs_status cs_engine_reset_counters(cs_engine* engine);

/* JSON object mapping destination -> accepted-click count. */
cs_status cs_engine_counters_json(const cs_engine* engine, char** out_json);

/* -------- traffic simulation -------- */

typedef struct cs_nat_scenario {
  uint64_t pool_size;    /* A */
  uint64_t user_count;
  uint64_t clicker_count; /* C, <= user_count */
  uint32_t runs;
  uint64_t seed;
  int materialize_users; /* 0: sample clicker addresses directly */
  uint32_t threads;      /* 0: hardware concurrency */
} cs_nat_scenario;

/* Monte Carlo NAT collision experiment. out_json gets the report (mean
 * repeated-click fraction, std error, model loss factor, 0.5*C/A, absolute
 * difference); out_csv gets one `run_index,repeated_fraction` row per run.
 * Either output may be NULL. Identical (scenario, seed) give identical
 * reports. */
cs_status cs_run_nat_scenario(const cs_nat_scenario* scenario,
                              char** out_json, char** out_csv);

typedef struct cs_attack_scenario {
  const char* attacker_ip;
  const char* dest;
  uint64_t n_clicks;
  double mean_interval_seconds;
  double interval_jitter;  /* [0,1]: 0 fixed spacing, 1 exponential */
  double background_rate;  /* benign clicks/second from the same net */
  uint64_t seed;
} cs_attack_scenario;

/* Synthetic single-source spam burst (plus optional benign background from
 * the same net) against a fresh engine. The JSON report carries per-role
 * totals and the full decision trace; the CSV one row per decision. */
cs_status cs_run_attack_scenario(const cs_attack_scenario* scenario,
                                 const cs_engine_config* config,
                                 cs_registry* registry, char** out_json,
                                 char** out_csv);

/* -------- ingestion service -------- */

typedef struct cs_service cs_service;

typedef struct cs_service_config {
  const char* listen_address;    /* host:port; port 0 picks a free port */
  const char* registry_path;
  double window_seconds;
  double threshold;
  uint64_t fallback_pool_size;
  const char* decision_log_path; /* NULL or "" disables the decision log */
  uint64_t ledger_capacity;
  double max_clock_skew_seconds; /* 0 trusts caller timestamps */
} cs_service_config;

/* HTTP endpoints: POST /clicks, GET /counters, POST /counters/reset,
 * GET /healthz. Every 200 click response is preceded by its decision-log
 * append. */
cs_status cs_service_start(const cs_service_config* config, cs_service** out);
cs_status cs_service_port(const cs_service* service, int* out);
cs_status cs_service_stop(cs_service* service);
void cs_service_free(cs_service* service);

/* -------- decision-log replay -------- */

typedef struct cs_replay_result {
  uint64_t records_replayed;
  int diverged;
  uint64_t first_divergence_seq;
  char detail[256];
} cs_replay_result;

/* Re-decide a recorded click stream on a fresh engine built from `config`
 * (listen/log fields ignored) and compare field by field. Returns
 * CS_ERR_DIVERGENCE when decisions differ, CS_ERR_PARSE on corrupt logs. */
cs_status cs_replay_log(const char* log_path, const cs_service_config* config,
                        cs_replay_result* out);

#ifdef __cplusplus
}
#endif

#endif /* CLICKSHIELD_H */
