// clickshield command-line front end. Talks to the engine exclusively
// through the public C API (clickshield.h).
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clickshield.h"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int fail(cs_status status, const char* doing) {
  std::fprintf(stderr, "error: %s: %s (%s)\n", doing, cs_last_error(),
               cs_status_name(status));
  return 1;
}

bool write_file(const std::string& path, const char* content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    return false;
  }
  return true;
}

struct ServeOptions {
  std::string listen_address = "127.0.0.1:8080";
  std::string registry_path;
  double window_seconds = 0.0;
  double threshold = 0.01;
  std::uint64_t fallback_pool_size = 1;
  std::string decision_log_path;
  std::uint64_t ledger_capacity = 1u << 20;
  double max_clock_skew_seconds = 0.0;

  std::string config_path;
  // Options tracked for config-file precedence (CLI/env beat the file).
  CLI::Option* listen_opt = nullptr;
  CLI::Option* registry_opt = nullptr;
  CLI::Option* window_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* fallback_opt = nullptr;
  CLI::Option* log_opt = nullptr;
  CLI::Option* capacity_opt = nullptr;
  CLI::Option* skew_opt = nullptr;

  cs_service_config to_config() const {
    cs_service_config cfg{};
    cfg.listen_address = listen_address.c_str();
    cfg.registry_path = registry_path.c_str();
    cfg.window_seconds = window_seconds;
    cfg.threshold = threshold;
    cfg.fallback_pool_size = fallback_pool_size;
    cfg.decision_log_path =
        decision_log_path.empty() ? nullptr : decision_log_path.c_str();
    cfg.ledger_capacity = ledger_capacity;
    cfg.max_clock_skew_seconds = max_clock_skew_seconds;
    return cfg;
  }
};

void add_service_options(CLI::App& cmd, ServeOptions& opts,
                         bool listen_and_log) {
  if (listen_and_log) {
    opts.listen_opt =
        cmd.add_option("--listen-address", opts.listen_address,
                       "host:port to bind (port 0 picks a free port)")
            ->envname("CLICKSHIELD_LISTEN_ADDRESS")
            ->capture_default_str();
    opts.log_opt =
        cmd.add_option("--decision-log", opts.decision_log_path,
                       "append-only JSONL decision log (empty disables)")
            ->envname("CLICKSHIELD_DECISION_LOG_PATH");
    opts.skew_opt =
        cmd.add_option("--max-clock-skew-seconds",
                       opts.max_clock_skew_seconds,
                       "reject caller timestamps farther than this from "
                       "server time (0 trusts the caller)")
            ->envname("CLICKSHIELD_MAX_CLOCK_SKEW_SECONDS")
            ->capture_default_str();
  }
  opts.registry_opt =
      cmd.add_option("--registry", opts.registry_path,
                     "whois-style net registry file (CIDR,net_id[,pool_size])")
          ->envname("CLICKSHIELD_REGISTRY_PATH");
  opts.window_opt =
      cmd.add_option("--window-seconds", opts.window_seconds,
                     "statistics window T in seconds")
          ->envname("CLICKSHIELD_WINDOW_SECONDS");
  opts.threshold_opt =
      cmd.add_option("--threshold", opts.threshold,
                     "acceptable loss-factor budget, in (0,1)")
          ->envname("CLICKSHIELD_THRESHOLD")
          ->capture_default_str();
  opts.fallback_opt =
      cmd.add_option("--fallback-pool-size", opts.fallback_pool_size,
                     "pool size assumed for IPs missing from the registry")
          ->envname("CLICKSHIELD_FALLBACK_POOL_SIZE")
          ->capture_default_str();
  opts.capacity_opt =
      cmd.add_option("--ledger-capacity", opts.ledger_capacity,
                     "max clicks retained in the window before back-pressure")
          ->envname("CLICKSHIELD_LEDGER_CAPACITY")
          ->capture_default_str();
  cmd.add_option("--config", opts.config_path,
                 "INI/TOML-style file with keys mirroring the service "
                 "config (listen_address, registry_path, window_seconds, "
                 "threshold, fallback_pool_size, decision_log_path, "
                 "ledger_capacity, max_clock_skew_seconds)");
}

// Command line and CLICKSHIELD_* environment values win over the file.
int merge_config_file(ServeOptions& opts) {
  if (opts.config_path.empty()) {
    return 0;
  }
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI{}.from_file(opts.config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: config %s: %s\n", opts.config_path.c_str(),
                 e.what());
    return 1;
  }
  const auto unset = [](const CLI::Option* opt) {
    return opt == nullptr || opt->count() == 0;
  };
  try {
    for (const auto& item : items) {
      if (!item.parents.empty() || item.inputs.size() != 1) {
        std::fprintf(stderr, "error: config %s: unsupported entry '%s'\n",
                     opts.config_path.c_str(), item.fullname().c_str());
        return 1;
      }
      const std::string& value = item.inputs.front();
      if (item.name == "listen_address" && unset(opts.listen_opt)) {
        opts.listen_address = value;
      } else if (item.name == "registry_path" && unset(opts.registry_opt)) {
        opts.registry_path = value;
      } else if (item.name == "window_seconds" && unset(opts.window_opt)) {
        opts.window_seconds = std::stod(value);
      } else if (item.name == "threshold" && unset(opts.threshold_opt)) {
        opts.threshold = std::stod(value);
      } else if (item.name == "fallback_pool_size" &&
                 unset(opts.fallback_opt)) {
        opts.fallback_pool_size = std::stoull(value);
      } else if (item.name == "decision_log_path" && unset(opts.log_opt)) {
        opts.decision_log_path = value;
      } else if (item.name == "ledger_capacity" && unset(opts.capacity_opt)) {
        opts.ledger_capacity = std::stoull(value);
      } else if (item.name == "max_clock_skew_seconds" &&
                 unset(opts.skew_opt)) {
        opts.max_clock_skew_seconds = std::stod(value);
      }
      // Known-but-overridden keys and keys for the other role (a serve
      // config reused for replay) are fine to skip.
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: config %s: bad value: %s\n",
                 opts.config_path.c_str(), e.what());
    return 1;
  }
  return 0;
}

int require_serve_fields(const ServeOptions& opts) {
  if (opts.registry_path.empty()) {
    std::fprintf(stderr,
                 "error: a registry is required (--registry, config "
                 "registry_path, or CLICKSHIELD_REGISTRY_PATH)\n");
    return 1;
  }
  if (opts.window_seconds <= 0.0) {
    std::fprintf(stderr,
                 "error: a positive statistics window is required "
                 "(--window-seconds, config window_seconds, or "
                 "CLICKSHIELD_WINDOW_SECONDS)\n");
    return 1;
  }
  return 0;
}

int run_serve(const ServeOptions& opts) {
  const cs_service_config cfg = opts.to_config();
  cs_service* service = nullptr;
  if (const cs_status st = cs_service_start(&cfg, &service)) {
    return fail(st, "starting service");
  }
  int port = 0;
  cs_service_port(service, &port);
  std::printf("clickshield serving on %s (port %d)\n",
              opts.listen_address.c_str(), port);
  std::printf("  registry: %s\n  window: %gs  threshold: %g  log: %s\n",
              opts.registry_path.c_str(), opts.window_seconds, opts.threshold,
              opts.decision_log_path.empty() ? "(disabled)"
                                             : opts.decision_log_path.c_str());
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  std::printf("shutting down\n");
  cs_service_stop(service);
  cs_service_free(service);
  return 0;
}

int run_simulate_nat(const cs_nat_scenario& scenario,
                     const std::string& out_json, const std::string& out_csv) {
  char* report_json = nullptr;
  char* report_csv = nullptr;
  if (const cs_status st =
          cs_run_nat_scenario(&scenario, &report_json, &report_csv)) {
    return fail(st, "running NAT scenario");
  }

  int rc = 0;
  if (!write_file(out_json, report_json) || !write_file(out_csv, report_csv)) {
    rc = 1;
  }

  const auto j = nlohmann::json::parse(report_json);
  std::printf("NAT scenario: A=%llu users=%llu C=%llu runs=%u seed=%llu\n",
              static_cast<unsigned long long>(scenario.pool_size),
              static_cast<unsigned long long>(scenario.user_count),
              static_cast<unsigned long long>(scenario.clicker_count),
              scenario.runs,
              static_cast<unsigned long long>(scenario.seed));
  std::printf("  mean repeated-click fraction: %.6g  (std error %.3g)\n",
              j["mean_repeated_fraction"].get<double>(),
              j["std_error"].get<double>());
  std::printf("  model loss factor L(A,C):     %.6g\n",
              j["model_loss_factor"].get<double>());
  std::printf("  model upper bound C/(2A):     %.6g\n",
              j["model_upper_bound"].get<double>());
  std::printf("  |mean - bound|:               %.6g\n",
              j["abs_difference"].get<double>());
  std::printf("  reports: %s, %s\n", out_json.c_str(), out_csv.c_str());

  cs_string_free(report_json);
  cs_string_free(report_csv);
  return rc;
}

int run_simulate_attack(const cs_attack_scenario& scenario,
                        const cs_engine_config& engine_cfg,
                        const std::string& registry_path, std::uint64_t pool,
                        const std::string& out_json,
                        const std::string& out_csv) {
  cs_registry* registry = nullptr;
  cs_status st;
  if (!registry_path.empty()) {
    st = cs_registry_load_file(registry_path.c_str(), 1, &registry);
  } else {
    // Synthesize a single net of the requested pool size around the
    // attacker; 10.0.0.0/8 covers the default attacker address.
    const std::string text = "10.0.0.0/8,attnet," + std::to_string(pool) + "\n";
    st = cs_registry_load_text(text.c_str(), 1, &registry);
  }
  if (st) return fail(st, "loading registry");

  char* report_json = nullptr;
  char* report_csv = nullptr;
  st = cs_run_attack_scenario(&scenario, &engine_cfg, registry, &report_json,
                              &report_csv);
  cs_registry_free(registry);
  if (st) return fail(st, "running attack scenario");

  int rc = 0;
  if (!write_file(out_json, report_json) || !write_file(out_csv, report_csv)) {
    rc = 1;
  }

  const auto j = nlohmann::json::parse(report_json);
  std::printf("attack: %llu clicks from %s to %s (mean interval %gs)\n",
              static_cast<unsigned long long>(scenario.n_clicks),
              scenario.attacker_ip, scenario.dest,
              scenario.mean_interval_seconds);
  std::printf("  attacker:   accepted=%llu discarded=%llu\n",
              j["attacker"]["accepted"].get<unsigned long long>(),
              j["attacker"]["discarded"].get<unsigned long long>());
  std::printf("  background: accepted=%llu discarded=%llu\n",
              j["background"]["accepted"].get<unsigned long long>(),
              j["background"]["discarded"].get<unsigned long long>());
  std::printf("  reference:  a fielded heuristic under the same pattern "
              "counted %llu and discarded %llu\n",
              j["reference_comparison"]["counted"].get<unsigned long long>(),
              j["reference_comparison"]["invalid"].get<unsigned long long>());
  std::printf("  reports: %s, %s\n", out_json.c_str(), out_csv.c_str());

  cs_string_free(report_json);
  cs_string_free(report_csv);
  return rc;
}

int run_eval_model(std::uint64_t pool, std::uint64_t clicks_from,
                   std::uint64_t clicks_to, std::uint64_t clicks_step) {
  std::printf("%14s %14s %14s %14s %14s %14s\n", "C", "lambda", "N(lambda)",
              "L(A,C)", "C/(2A)", "|L-C/(2A)|");
  for (std::uint64_t c = clicks_from; c <= clicks_to; c += clicks_step) {
    double lambda = 0, n = 0, l = 0, bound = 0;
    cs_status st;
    if ((st = cs_lambda(pool, c, &lambda)) ||
        (st = cs_expected_repeats(lambda, &n)) ||
        (st = cs_loss_factor(pool, c, &l)) ||
        (st = cs_loss_upper_bound(pool, c, &bound))) {
      return fail(st, "evaluating model");
    }
    std::printf("%14llu %14.8g %14.8g %14.8g %14.8g %14.8g\n",
                static_cast<unsigned long long>(c), lambda, n, l, bound,
                std::abs(l - bound));
  }
  return 0;
}

int run_replay(const std::string& log_path, const ServeOptions& opts) {
  const cs_service_config cfg = opts.to_config();
  cs_replay_result result{};
  const cs_status st = cs_replay_log(log_path.c_str(), &cfg, &result);
  if (st == CS_OK) {
    std::printf("replayed %llu records: decisions identical\n",
                static_cast<unsigned long long>(result.records_replayed));
    return 0;
  }
  if (st == CS_ERR_DIVERGENCE) {
    std::printf("replayed %llu records: DIVERGED at seq %llu\n  %s\n",
                static_cast<unsigned long long>(result.records_replayed),
                static_cast<unsigned long long>(result.first_divergence_seq),
                result.detail);
    return 1;
  }
  return fail(st, "replaying log");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"click-spam protection engine for pay-per-click accounting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("clickshield ") + cs_version());

  // --- serve ---
  ServeOptions serve_opts;
  CLI::App* serve = app.add_subcommand(
      "serve", "run the HTTP ingestion service on the billing path");
  add_service_options(*serve, serve_opts, /*listen_and_log=*/true);

  // --- simulate nat / simulate attack ---
  CLI::App* simulate =
      app.add_subcommand("simulate", "synthetic traffic experiments");
  simulate->require_subcommand(1);

  cs_nat_scenario nat{};
  nat.runs = 1000;
  nat.seed = 42;
  std::string nat_out_json = "nat_report.json";
  std::string nat_out_csv = "nat_report.csv";
  bool materialize = false;
  CLI::App* sim_nat = simulate->add_subcommand(
      "nat", "NAT collision experiment: benign users behind a shared pool");
  sim_nat->add_option("--pool", nat.pool_size, "address pool size A")
      ->required();
  sim_nat->add_option("--users", nat.user_count, "users behind the pool")
      ->required();
  sim_nat->add_option("--clickers", nat.clicker_count,
                      "distinct users who click (C)")
      ->required();
  sim_nat->add_option("--runs", nat.runs, "Monte Carlo runs")
      ->capture_default_str();
  sim_nat->add_option("--seed", nat.seed, "RNG seed")->capture_default_str();
  sim_nat->add_flag("--materialize-users", materialize,
                    "place every user explicitly (slow fidelity path)");
  sim_nat->add_option("--threads", nat.threads,
                      "worker threads (0 = hardware)");
  sim_nat->add_option("--out-json", nat_out_json, "report JSON path")
      ->capture_default_str();
  sim_nat->add_option("--out-csv", nat_out_csv, "per-run CSV path")
      ->capture_default_str();

  cs_attack_scenario attack{};
  std::string attacker_ip = "10.0.0.1";
  std::string attack_dest = "/ad";
  attack.n_clicks = 40;
  attack.mean_interval_seconds = 1200;
  attack.interval_jitter = 1.0;
  attack.background_rate = 0.0;
  attack.seed = 42;
  cs_engine_config attack_engine{};
  attack_engine.window_seconds = 1e9;
  attack_engine.threshold = 0.01;
  attack_engine.ledger_capacity = 1u << 20;
  std::uint64_t attack_pool = 256;
  std::string attack_registry_path;
  std::string attack_out_json = "attack_report.json";
  std::string attack_out_csv = "attack_report.csv";

  CLI::App* sim_attack = simulate->add_subcommand(
      "attack", "single-source spam burst against the filter");
  sim_attack->add_option("--clicks", attack.n_clicks, "spam clicks to send")
      ->required();
  sim_attack->add_option("--attacker-ip", attacker_ip, "spamming source IP")
      ->capture_default_str();
  sim_attack->add_option("--dest", attack_dest, "targeted destination")
      ->capture_default_str();
  sim_attack
      ->add_option("--mean-interval", attack.mean_interval_seconds,
                   "mean seconds between spam clicks")
      ->capture_default_str();
  sim_attack
      ->add_option("--jitter", attack.interval_jitter,
                   "inter-arrival blend: 0 fixed, 1 exponential")
      ->capture_default_str();
  sim_attack
      ->add_option("--background-rate", attack.background_rate,
                   "benign clicks/second from the same net")
      ->capture_default_str();
  sim_attack->add_option("--seed", attack.seed, "RNG seed")
      ->capture_default_str();
  sim_attack
      ->add_option("--pool", attack_pool,
                   "pool size of the synthesized attacker net")
      ->capture_default_str();
  sim_attack->add_option("--registry", attack_registry_path,
                         "use this registry file instead of synthesizing one");
  sim_attack
      ->add_option("--window-seconds", attack_engine.window_seconds,
                   "statistics window T")
      ->capture_default_str();
  sim_attack->add_option("--threshold", attack_engine.threshold,
                         "loss budget")
      ->capture_default_str();
  sim_attack
      ->add_option("--capacity", attack_engine.ledger_capacity,
                   "ledger capacity")
      ->capture_default_str();
  sim_attack->add_option("--out-json", attack_out_json, "report JSON path")
      ->capture_default_str();
  sim_attack->add_option("--out-csv", attack_out_csv, "decision CSV path")
      ->capture_default_str();

  // --- eval-model ---
  std::uint64_t eval_pool = 0;
  std::uint64_t eval_clicks = 0;
  std::uint64_t eval_clicks_to = 0;
  std::uint64_t eval_step = 1;
  CLI::App* eval = app.add_subcommand(
      "eval-model", "print lambda, N, L and the loss ceiling for (A, C)");
  const auto at_least_one =
      CLI::Range(std::uint64_t{1}, std::numeric_limits<std::uint64_t>::max());
  eval->add_option("--pool", eval_pool, "address pool size A")
      ->check(at_least_one)
      ->required();
  eval->add_option("--clicks", eval_clicks, "click count C (>= 1)")
      ->check(at_least_one)
      ->required();
  eval->add_option("--clicks-to", eval_clicks_to,
                   "sweep C up to this value (inclusive)");
  eval->add_option("--clicks-step", eval_step, "sweep step")
      ->check(at_least_one);

  // --- replay ---
  ServeOptions replay_opts;
  std::string replay_log_path;
  CLI::App* replay = app.add_subcommand(
      "replay", "re-decide a decision log against a fresh engine");
  replay->add_option("--log", replay_log_path, "decision log (JSONL)")
      ->required();
  add_service_options(*replay, replay_opts, /*listen_and_log=*/false);

  CLI11_PARSE(app, argc, argv);

  if (serve->parsed()) {
    if (int rc = merge_config_file(serve_opts)) return rc;
    if (int rc = require_serve_fields(serve_opts)) return rc;
    return run_serve(serve_opts);
  }
  if (sim_nat->parsed()) {
    nat.materialize_users = materialize ? 1 : 0;
    return run_simulate_nat(nat, nat_out_json, nat_out_csv);
  }
  if (sim_attack->parsed()) {
    attack.attacker_ip = attacker_ip.c_str();
    attack.dest = attack_dest.c_str();
    return run_simulate_attack(attack, attack_engine, attack_registry_path,
                               attack_pool, attack_out_json, attack_out_csv);
  }
  if (eval->parsed()) {
    const std::uint64_t to =
        eval_clicks_to == 0 ? eval_clicks : eval_clicks_to;
    return run_eval_model(eval_pool, eval_clicks, to, eval_step);
  }
  if (replay->parsed()) {
    if (int rc = merge_config_file(replay_opts)) return rc;
    if (int rc = require_serve_fields(replay_opts)) return rc;
    return run_replay(replay_log_path, replay_opts);
  }
  return 0;
}
