#include "clickshield/service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "clickshield/errors.hpp"

namespace clickshield {

namespace {

double now_epoch_seconds() {
  return std::chrono::duration<double>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::pair<std::string, int> split_listen_address(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw std::invalid_argument("listen_address must be host:port");
  }
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("listen_address has a non-numeric port");
  }
  if (port < 0 || port > 65535) {
    throw std::invalid_argument("listen_address port out of range");
  }
  return {addr.substr(0, colon), port};
}

void respond_json(httplib::Response& res, int status,
                  const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void respond_error(httplib::Response& res, int status,
                   const std::string& message) {
  respond_json(res, status, nlohmann::json{{"error", message}});
}

}  // namespace

void ServiceConfig::validate() const {
  split_listen_address(listen_address);
  if (registry_path.empty()) {
    throw std::invalid_argument("registry_path is required");
  }
  if (fallback_pool_size == 0) {
    throw std::invalid_argument("fallback_pool_size must be >= 1");
  }
  if (max_clock_skew_seconds < 0.0 ||
      !std::isfinite(max_clock_skew_seconds)) {
    throw std::invalid_argument("max_clock_skew_seconds must be >= 0");
  }
  engine_config().validate();
}

EngineConfig ServiceConfig::engine_config() const {
  EngineConfig cfg;
  cfg.window.seconds = window_seconds;
  cfg.threshold = threshold;
  cfg.ledger_capacity = ledger_capacity;
  return cfg;
}

struct IngestService::Impl {
  ServiceConfig config;
  std::string bind_host;
  int requested_port = 0;

  std::shared_ptr<const Registry> registry;
  std::unique_ptr<FilterEngine> engine;
  std::unique_ptr<DecisionLogger> logger;

  // Serializes decide + log-sequence assignment so the log order equals the
  // decision order (replay depends on it).
  std::mutex decide_mutex;

  httplib::Server server;
  std::thread server_thread;
  std::atomic<int> bound_port{0};
  std::atomic<bool> started{false};

  void handle_click_request(const httplib::Request& req,
                            httplib::Response& res);
  void wire_routes();
};

void IngestService::Impl::handle_click_request(const httplib::Request& req,
                                               httplib::Response& res) {
  nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    respond_error(res, 400, "body must be a JSON object");
    return;
  }

  ClickEvent click;
  if (!body.contains("source") || !body["source"].is_string()) {
    respond_error(res, 400, "missing string field 'source'");
    return;
  }
  auto source = Ipv4::parse(body["source"].get<std::string>());
  if (!source) {
    respond_error(res, 400, "unparseable source IP");
    return;
  }
  click.source = *source;

  if (!body.contains("dest") || !body["dest"].is_string()) {
    respond_error(res, 400, "missing string field 'dest'");
    return;
  }
  click.dest = body["dest"].get<std::string>();
  if (click.dest.empty()) {
    respond_error(res, 400, "dest must be non-empty");
    return;
  }

  if (body.contains("time")) {
    if (!body["time"].is_number()) {
      respond_error(res, 400, "time must be a number");
      return;
    }
    click.time = body["time"].get<double>();
    if (!std::isfinite(click.time) || click.time < 0.0) {
      respond_error(res, 400, "time must be finite and >= 0");
      return;
    }
    if (config.max_clock_skew_seconds > 0.0 &&
        std::abs(click.time - now_epoch_seconds()) >
            config.max_clock_skew_seconds) {
      respond_error(res, 400, "time outside the accepted skew bound");
      return;
    }
  } else {
    click.time = now_epoch_seconds();
  }

  // Reserve the log slot before touching engine state: a full queue must
  // turn the click away with nothing mutated.
  if (logger && !logger->try_acquire_slot(std::chrono::milliseconds(2000))) {
    respond_error(res, 503, "decision log back-pressure; retry");
    return;
  }

  Decision decision;
  std::future<void> logged;
  try {
    std::lock_guard lock(decide_mutex);
    decision = engine->handle_click(click);
    if (logger) logged = logger->submit(click, decision);
  } catch (const CapacityError& e) {
    if (logger) logger->release_slot();
    respond_error(res, 503, e.what());
    return;
  } catch (const Error& e) {
    if (logger) logger->release_slot();
    respond_error(res, 400, e.what());
    return;
  }

  if (logged.valid()) {
    try {
      logged.get();  // record is on disk before the response leaves
    } catch (const std::exception& e) {
      respond_error(res, 503, e.what());
      return;
    }
  }

  respond_json(res, 200,
               nlohmann::json{
                   {"outcome", to_string(decision.outcome)},
                   {"reason", to_string(decision.reason)},
                   {"observed_c", decision.observed_c},
                   {"pool_size", decision.pool_size},
                   {"loss_bound", decision.loss_bound},
               });
}

void IngestService::Impl::wire_routes() {
  server.Post("/clicks",
              [this](const httplib::Request& req, httplib::Response& res) {
                handle_click_request(req, res);
              });

  server.Get("/counters",
             [this](const httplib::Request&, httplib::Response& res) {
               nlohmann::json j = nlohmann::json::object();
               for (const auto& [dest, count] : engine->counters()) {
                 j[dest] = count;
               }
               respond_json(res, 200, j);
             });

  server.Post("/counters/reset",
              [this](const httplib::Request&, httplib::Response& res) {
                engine->reset_counters();
                respond_json(res, 200, nlohmann::json{{"reset", true}});
              });

  server.Get("/healthz",
             [this](const httplib::Request&, httplib::Response& res) {
               respond_json(res, 200, nlohmann::json{{"status", "ok"}});
             });
}

IngestService::IngestService(ServiceConfig config)
    : impl_(std::make_unique<Impl>()) {
  config.validate();
  impl_->config = config;
  std::tie(impl_->bind_host, impl_->requested_port) =
      split_listen_address(config.listen_address);

  impl_->registry = std::make_shared<const Registry>(
      Registry::from_file(config.registry_path, config.fallback_pool_size));
  impl_->engine = std::make_unique<FilterEngine>(config.engine_config(),
                                                 impl_->registry);
  if (!config.decision_log_path.empty()) {
    impl_->logger = std::make_unique<DecisionLogger>(config.decision_log_path);
  }
  impl_->wire_routes();
}

IngestService::~IngestService() { stop(); }

void IngestService::start() {
  if (impl_->started.exchange(true)) {
    throw Error(ErrorCode::Internal, "service already started");
  }
  int port = impl_->requested_port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->bind_host);
    if (port < 0) {
      throw IoError("cannot bind " + impl_->config.listen_address);
    }
  } else if (!impl_->server.bind_to_port(impl_->bind_host, port)) {
    throw IoError("cannot bind " + impl_->config.listen_address);
  }
  impl_->bound_port = port;

  impl_->server_thread = std::thread([this] {
    impl_->server.listen_after_bind();
  });
  impl_->server.wait_until_ready();
}

void IngestService::stop() {
  if (!impl_->started.load()) return;
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  if (impl_->logger) impl_->logger->close();
}

int IngestService::port() const { return impl_->bound_port.load(); }

const std::string& IngestService::host() const { return impl_->bind_host; }

FilterEngine& IngestService::engine() { return *impl_->engine; }

}  // namespace clickshield
