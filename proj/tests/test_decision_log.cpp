#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "clickshield/decision_log.hpp"
#include "clickshield/errors.hpp"

using namespace clickshield;

namespace {

Ipv4 ip(const char* text) { return Ipv4::parse_or_throw(text); }

std::shared_ptr<const Registry> test_registry() {
  return std::make_shared<const Registry>(
      Registry::from_text("10.0.0.0/8,netA,256\n10.1.0.0/16,netB\n", 1));
}

EngineConfig engine_config(double threshold = 0.01) {
  EngineConfig cfg;
  cfg.window.seconds = 600;
  cfg.threshold = threshold;
  cfg.ledger_capacity = 1 << 16;
  return cfg;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name)
      : path(std::filesystem::temp_directory_path() /
             (name + std::to_string(std::random_device{}()))) {}
  ~TempFile() { std::filesystem::remove(path); }
};

ClickEvent random_click(std::mt19937_64& gen, double t) {
  ClickEvent click;
  click.source = Ipv4{0x0a000000u | static_cast<std::uint32_t>(gen() % 30)};
  click.dest = "/d" + std::to_string(gen() % 4);
  click.time = t;
  return click;
}

}  // namespace

TEST_CASE("decision records survive a JSON round trip") {
  std::mt19937_64 gen(0x10601u);
  FilterEngine engine(engine_config(), test_registry());
  for (int i = 0; i < 500; ++i) {
    DecisionRecord rec;
    rec.seq = static_cast<std::uint64_t>(i) + 1;
    rec.click = random_click(gen, static_cast<double>(i) * 1.5);
    rec.decision = engine.handle_click(rec.click);

    const DecisionRecord parsed =
        record_from_json_line(to_json_line(rec));
    REQUIRE(parsed.seq == rec.seq);
    REQUIRE(parsed.click.source == rec.click.source);
    REQUIRE(parsed.click.dest == rec.click.dest);
    REQUIRE(parsed.click.time == rec.click.time);
    REQUIRE(parsed.decision.outcome == rec.decision.outcome);
    REQUIRE(parsed.decision.reason == rec.decision.reason);
    REQUIRE(parsed.decision.observed_c == rec.decision.observed_c);
    REQUIRE(parsed.decision.pool_size == rec.decision.pool_size);
    REQUIRE(parsed.decision.loss_bound == rec.decision.loss_bound);
    REQUIRE(parsed.decision.net_id == rec.decision.net_id);
  }
}

TEST_CASE("logger writes sequenced lines and honors write-ahead futures") {
  TempFile log("cs_log_");
  {
    DecisionLogger logger(log.path.string(), 8);
    FilterEngine engine(engine_config(), test_registry());
    for (int i = 0; i < 100; ++i) {
      const ClickEvent click{ip("10.0.0.1"), "/x", static_cast<double>(i)};
      const Decision d = engine.handle_click(click);
      REQUIRE(logger.try_acquire_slot(std::chrono::milliseconds(1000)));
      auto fut = logger.submit(click, d);
      fut.get();  // resolved only after the line hit the file
    }
    CHECK(logger.records_submitted() == 100);
  }

  std::ifstream in(log.path);
  std::string line;
  std::uint64_t expect_seq = 1;
  while (std::getline(in, line)) {
    const DecisionRecord rec = record_from_json_line(line);
    REQUIRE(rec.seq == expect_seq);
    ++expect_seq;
  }
  CHECK(expect_seq == 101);
}

TEST_CASE("reopening a log continues its sequence") {
  TempFile log("cs_log_");
  FilterEngine engine(engine_config(), test_registry());
  const ClickEvent click{ip("10.0.0.1"), "/x", 1.0};
  {
    DecisionLogger logger(log.path.string());
    REQUIRE(logger.try_acquire_slot(std::chrono::milliseconds(100)));
    logger.submit(click, engine.handle_click(click)).get();
  }
  {
    DecisionLogger logger(log.path.string());
    REQUIRE(logger.try_acquire_slot(std::chrono::milliseconds(100)));
    logger.submit(click, engine.handle_click(click)).get();
  }

  std::ifstream in(log.path);
  std::string line;
  std::vector<std::uint64_t> seqs;
  while (std::getline(in, line)) {
    if (!line.empty()) seqs.push_back(record_from_json_line(line).seq);
  }
  CHECK(seqs == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("released slots do not consume sequence numbers") {
  TempFile log("cs_log_");
  DecisionLogger logger(log.path.string(), 2);
  REQUIRE(logger.try_acquire_slot(std::chrono::milliseconds(100)));
  logger.release_slot();

  FilterEngine engine(engine_config(), test_registry());
  const ClickEvent click{ip("10.0.0.1"), "/x", 1.0};
  const Decision d = engine.handle_click(click);
  REQUIRE(logger.try_acquire_slot(std::chrono::milliseconds(100)));
  logger.submit(click, d).get();
  CHECK(logger.records_submitted() == 1);
}

TEST_CASE("replay of a recorded stream has zero divergences") {
  TempFile log("cs_log_");
  std::mt19937_64 gen(0xabc123u);
  {
    DecisionLogger logger(log.path.string());
    FilterEngine engine(engine_config(), test_registry());
    for (int i = 0; i < 1500; ++i) {
      const ClickEvent click = random_click(gen, static_cast<double>(i));
      const Decision d = engine.handle_click(click);
      REQUIRE(logger.try_acquire_slot(std::chrono::milliseconds(1000)));
      logger.submit(click, d).get();
    }
  }

  FilterEngine fresh(engine_config(), test_registry());
  const ReplayResult result = replay_log_file(log.path.string(), fresh);
  CHECK(result.records_replayed == 1500);
  CHECK_FALSE(result.diverged);

  SUBCASE("a different threshold diverges at the first affected decision") {
    FilterEngine other(engine_config(0.9), test_registry());
    const ReplayResult diverged = replay_log_file(log.path.string(), other);
    CHECK(diverged.diverged);
    CHECK(diverged.first_divergence_seq > 0);
    CHECK(diverged.detail.find("seq") != std::string::npos);
    CHECK(diverged.records_replayed <= 1500);
  }
}

TEST_CASE("empty log replays trivially") {
  std::istringstream empty;
  FilterEngine engine(engine_config(), test_registry());
  const ReplayResult result = replay_log(empty, engine);
  CHECK(result.records_replayed == 0);
  CHECK_FALSE(result.diverged);
}

TEST_CASE("corrupt logs fail with the offending position") {
  FilterEngine engine(engine_config(), test_registry());

  SUBCASE("garbage line") {
    std::istringstream log(
        R"({"seq":1,"time":0.0,"source":"10.0.0.1","dest":"/x","net_id":"netA",)"
        R"("outcome":"ACCEPT","reason":"FIRST_FROM_SOURCE","observed_c":0,)"
        R"("pool_size":256,"loss_bound":0.0})"
        "\nnot json at all\n");
    try {
      replay_log(log, engine);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  SUBCASE("missing field") {
    std::istringstream log(R"({"seq":1,"time":0.0})" "\n");
    CHECK_THROWS_AS(replay_log(log, engine), ParseError);
  }

  SUBCASE("non-increasing sequence numbers") {
    DecisionRecord rec;
    rec.seq = 5;
    rec.click = {ip("10.0.0.1"), "/x", 0.0};
    rec.decision.net_id = "netA";
    rec.decision.pool_size = 256;
    const std::string line = to_json_line(rec);
    std::istringstream log(line + "\n" + line + "\n");
    try {
      replay_log(log, engine);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
  }
}
