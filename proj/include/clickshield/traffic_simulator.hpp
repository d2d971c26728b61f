#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "clickshield/filter_engine.hpp"
#include "clickshield/ipv4.hpp"
#include "clickshield/net_registry.hpp"

namespace clickshield {

// Reproducible randomness: mt19937_64 streams seeded per run through
// splitmix64, with hand-rolled integer/real mappings so results never
// depend on standard-library distribution internals.
namespace rng {

std::uint64_t splitmix64(std::uint64_t x);

/// Substream seed for run `run_index` of a scenario seeded with `seed`.
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run_index);

/// Uniform integer in [0, n) by rejection sampling. n >= 1.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n);

/// Uniform double in (0, 1], 53-bit resolution.
double unit_exclusive_zero(std::mt19937_64& gen);

/// Exponential variate with the given mean.
double exponential(std::mt19937_64& gen, double mean);

}  // namespace rng

/// Monte Carlo setup for the NAT collision experiment: user_count users
/// spread uniformly over pool_size addresses, clicker_count distinct users
/// click the same resource once each.
struct NatScenario {
  std::uint64_t pool_size = 0;     // A
  std::uint64_t user_count = 0;
  std::uint64_t clicker_count = 0; // C
  std::uint32_t runs = 0;
  std::uint64_t seed = 0;
  /// Clicked addresses are i.i.d. uniform whether or not the full user
  /// table exists, so the default path samples clicker addresses directly
  /// (O(C) per run). The materializing path is the slow fidelity check.
  bool materialize_users = false;
  std::uint32_t threads = 0;       // 0 = hardware concurrency

  void validate() const;
};

struct SimReport {
  double mean_repeated_fraction = 0.0;
  double std_error = 0.0;
  double model_loss_factor = 0.0;   // exact L(A,C)
  double model_upper_bound = 0.0;   // 0.5*C/A
  double abs_difference = 0.0;      // |mean - upper bound|
  std::uint32_t runs_completed = 0;
  /// Secondary metric: addresses that got >= 2 clicks, over A.
  double mean_multi_click_address_fraction = 0.0;
  std::vector<double> run_fractions;  // one repeated-click fraction per run
};

SimReport run_nat_scenario(const NatScenario& scenario);

struct ModelComparison {
  double abs_difference = 0.0;
  bool within_tolerance = false;
};

/// |mean - 0.5*C/A| against a caller-supplied bound.
ModelComparison compare_with_model(const SimReport& report, double tolerance);

/// Single-source spam burst aimed at one destination, optionally
/// interleaved with benign Poisson background traffic from the same net.
struct AttackScenario {
  Ipv4 attacker_ip;
  std::string dest;
  std::uint64_t n_clicks = 0;
  double mean_interval_seconds = 0.0;
  /// Inter-arrival blend: 1 = exponential with the given mean (default),
  /// 0 = fixed spacing. Mean interval is preserved for any value in [0,1].
  double interval_jitter = 1.0;
  double background_rate = 0.0;  // benign clicks/second from the same net
  std::uint64_t seed = 0;

  void validate() const;
};

struct AttackTraceRow {
  double time = 0.0;
  Ipv4 source;
  bool attacker = false;
  Decision decision;
};

struct AttackReport {
  std::uint64_t attacker_accepted = 0;
  std::uint64_t attacker_discarded = 0;
  std::uint64_t background_accepted = 0;
  std::uint64_t background_discarded = 0;
  std::vector<AttackTraceRow> trace;

  std::uint64_t accepted() const {
    return attacker_accepted + background_accepted;
  }
  std::uint64_t discarded() const {
    return attacker_discarded + background_discarded;
  }
};

/// Synthesize the event stream and feed it, in timestamp order, to a fresh
/// engine built from `config` and `registry`. The registry must contain the
/// attacker's net when background traffic is requested.
AttackReport run_attack_scenario(const AttackScenario& scenario,
                                 const EngineConfig& config,
                                 std::shared_ptr<const Registry> registry);

// Report serialization for offline analysis.
std::string nat_report_json(const NatScenario& scenario,
                            const SimReport& report);
std::string nat_report_csv(const SimReport& report);
std::string attack_report_json(const AttackScenario& scenario,
                               const AttackReport& report);
std::string attack_report_csv(const AttackReport& report);

}  // namespace clickshield
