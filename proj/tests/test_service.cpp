#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "clickshield/decision_log.hpp"
#include "clickshield/errors.hpp"
#include "clickshield/service.hpp"

using namespace clickshield;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("cs_svc_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::string write_registry(const TempDir& dir) {
  const auto path = dir.path / "registry.csv";
  std::ofstream out(path);
  out << "10.0.0.0/8,netA,256\n10.1.0.0/16,netB\n";
  return path.string();
}

ServiceConfig base_config(const TempDir& dir, bool with_log = true) {
  ServiceConfig cfg;
  cfg.listen_address = "127.0.0.1:0";
  cfg.registry_path = write_registry(dir);
  cfg.window_seconds = 3600;
  cfg.threshold = 0.01;
  cfg.fallback_pool_size = 1;
  cfg.ledger_capacity = 1 << 18;
  if (with_log) cfg.decision_log_path = (dir.path / "decisions.log").string();
  return cfg;
}

json post_click(httplib::Client& client, const json& body,
                int expected_status) {
  auto res = client.Post("/clicks", body.dump(), "application/json");
  REQUIRE(res != nullptr);
  REQUIRE(res->status == expected_status);
  return json::parse(res->body);
}

std::size_t count_lines(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("service answers the click/counters/health surface") {
  TempDir dir;
  IngestService service(base_config(dir));
  service.start();
  httplib::Client client("127.0.0.1", service.port());

  auto health = client.Get("/healthz");
  REQUIRE(health != nullptr);
  CHECK(health->status == 200);

  const json decision = post_click(
      client, {{"source", "10.0.0.1"}, {"dest", "/x"}, {"time", 100.0}}, 200);
  CHECK(decision["outcome"] == "ACCEPT");
  CHECK(decision["reason"] == "FIRST_FROM_SOURCE");
  CHECK(decision["observed_c"] == 0);
  CHECK(decision["pool_size"] == 256);
  CHECK(decision["loss_bound"] == 0.0);

  const json repeat = post_click(
      client, {{"source", "10.0.0.1"}, {"dest", "/x"}, {"time", 160.0}}, 200);
  CHECK(repeat["outcome"] == "DISCARD");
  CHECK(repeat["reason"] == "REPEAT_BELOW_THRESHOLD_DISCARDED");
  CHECK(repeat["observed_c"] == 1);

  auto counters = client.Get("/counters");
  REQUIRE(counters != nullptr);
  CHECK(json::parse(counters->body) == json{{"/x", 1}});

  auto reset = client.Post("/counters/reset", "", "application/json");
  REQUIRE(reset != nullptr);
  CHECK(reset->status == 200);
  counters = client.Get("/counters");
  CHECK(json::parse(counters->body) == json::object());

  service.stop();
}

TEST_CASE("malformed requests get 400 and change nothing") {
  TempDir dir;
  IngestService service(base_config(dir));
  service.start();
  httplib::Client client("127.0.0.1", service.port());

  post_click(client, {{"source", "not-an-ip"}, {"dest", "/x"}}, 400);
  post_click(client, {{"source", "10.0.0.1"}}, 400);
  post_click(client, {{"source", "10.0.0.1"}, {"dest", ""}}, 400);
  post_click(client,
             {{"source", "10.0.0.1"}, {"dest", "/x"}, {"time", -5.0}}, 400);
  auto res = client.Post("/clicks", "{{{", "application/json");
  REQUIRE(res != nullptr);
  CHECK(res->status == 400);

  auto counters = client.Get("/counters");
  CHECK(json::parse(counters->body) == json::object());
  CHECK(count_lines(base_config(dir).decision_log_path) == 0);

  service.stop();
}

TEST_CASE("timestamp skew bound rejects far-off caller times when enabled") {
  TempDir dir;
  auto cfg = base_config(dir);
  cfg.max_clock_skew_seconds = 60.0;
  IngestService service(cfg);
  service.start();
  httplib::Client client("127.0.0.1", service.port());

  // t=100 epoch seconds is decades away from now.
  post_click(client,
             {{"source", "10.0.0.1"}, {"dest", "/x"}, {"time", 100.0}}, 400);
  // Without an explicit time the server clock is used and accepted.
  const json ok =
      post_click(client, {{"source", "10.0.0.1"}, {"dest", "/x"}}, 200);
  CHECK(ok["outcome"] == "ACCEPT");

  service.stop();
}

TEST_CASE("every 200 response is preceded by exactly one log record") {
  TempDir dir;
  const auto cfg = base_config(dir);
  json counters_snapshot;
  {
    IngestService service(cfg);
    service.start();
    httplib::Client client("127.0.0.1", service.port());

    for (int i = 0; i < 60; ++i) {
      post_click(client,
                 {{"source", "10.0.0." + std::to_string(i % 8)},
                  {"dest", "/d" + std::to_string(i % 3)},
                  {"time", 1000.0 + i}},
                 200);
    }
    post_click(client, {{"source", "junk"}, {"dest", "/x"}}, 400);
    auto counters = client.Get("/counters");
    REQUIRE(counters != nullptr);
    counters_snapshot = json::parse(counters->body);
    service.stop();
  }

  CHECK(count_lines(cfg.decision_log_path) == 60);

  // The counters endpoint equals the fold of ACCEPT records in the log.
  json folded = json::object();
  {
    std::ifstream in(cfg.decision_log_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const DecisionRecord rec = record_from_json_line(line);
      if (rec.decision.outcome == Outcome::Accept) {
        const auto dest = rec.click.dest;
        folded[dest] = (folded.contains(dest) ? folded[dest].get<int>() : 0) + 1;
      }
    }
  }
  CHECK(counters_snapshot == folded);

  // The recorded stream replays to the very same decisions.
  auto registry = std::make_shared<const Registry>(
      Registry::from_file(cfg.registry_path, cfg.fallback_pool_size));
  FilterEngine fresh(cfg.engine_config(), registry);
  const ReplayResult replayed =
      replay_log_file(cfg.decision_log_path, fresh);
  CHECK(replayed.records_replayed == 60);
  CHECK_FALSE(replayed.diverged);
}

TEST_CASE("concurrent posters do not lose or duplicate log records") {
  TempDir dir;
  const auto cfg = base_config(dir);
  std::atomic<int> ok_count{0};
  {
    IngestService service(cfg);
    service.start();
    const int port = service.port();

    constexpr int kThreads = 8;
    constexpr int kPerThread = 100;
    std::vector<std::thread> posters;
    for (int t = 0; t < kThreads; ++t) {
      posters.emplace_back([t, port, &ok_count] {
        httplib::Client client("127.0.0.1", port);
        for (int i = 0; i < kPerThread; ++i) {
          const json body = {
              {"source", "10.0." + std::to_string(t) + "." +
                             std::to_string(i % 30)},
              {"dest", "/d" + std::to_string(i % 4)},
              {"time", 5000.0 + i}};
          auto res = client.Post("/clicks", body.dump(), "application/json");
          if (res && res->status == 200) ++ok_count;
        }
      });
    }
    for (auto& t : posters) t.join();
    service.stop();
  }

  CHECK(ok_count.load() == 800);
  CHECK(count_lines(cfg.decision_log_path) == 800);

  auto registry = std::make_shared<const Registry>(
      Registry::from_file(cfg.registry_path, cfg.fallback_pool_size));
  FilterEngine fresh(cfg.engine_config(), registry);
  const ReplayResult replayed =
      replay_log_file(cfg.decision_log_path, fresh);
  CHECK(replayed.records_replayed == 800);
  CHECK_FALSE(replayed.diverged);
}

TEST_CASE("startup failures abort construction") {
  TempDir dir;

  auto bad_registry = base_config(dir, false);
  bad_registry.registry_path = (dir.path / "missing.csv").string();
  CHECK_THROWS_AS(IngestService{bad_registry}, IoError);

  auto bad_window = base_config(dir, false);
  bad_window.window_seconds = 0;
  CHECK_THROWS_AS(IngestService{bad_window}, std::invalid_argument);

  auto bad_listen = base_config(dir, false);
  bad_listen.listen_address = "no-port";
  CHECK_THROWS_AS(IngestService{bad_listen}, std::invalid_argument);
}
