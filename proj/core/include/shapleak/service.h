// Copyright 2026 The Shapleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPLEAK_SERVICE_H_
#define SHAPLEAK_SERVICE_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapleak/defense.h"
#include "shapleak/explain.h"
#include "shapleak/models.h"
#include "shapleak/wire.h"

namespace shapleak {

struct TargetClassPolicy {
  bool top_predicted = true;
  std::size_t fixed_class = 0;

  static TargetClassPolicy top() { return {}; }
  static TargetClassPolicy fixed(std::size_t c) { return {false, c}; }
};

struct ServiceConfig {
  std::filesystem::path model_path;
  ExplainMethod method = ExplainMethod::sampled(50);
  std::uint64_t seed = 0;
  ReferenceSample reference;
  TargetClassPolicy target_class;
  DefenseConfig defense;
  std::map<std::string, std::int64_t> budgets;
  std::string listen = "127.0.0.1:7070";
  std::size_t calibration_size = 256;
};

// Environment variable that overrides `listen` when a config file is loaded.
inline constexpr const char* kListenEnvVar = "SHAPLEAK_LISTEN";

ServiceConfig service_config_from_json(const nlohmann::json& doc);
nlohmann::json service_config_to_json(const ServiceConfig& cfg);
ServiceConfig load_service_config(const std::filesystem::path& path);

struct QueryRecord {
  std::string api_key;
  std::chrono::system_clock::time_point timestamp;
  std::uint64_t sample_hash = 0;
  std::int64_t queries_used = 0;
};

// Pay-per-query explanation endpoint. The model and configuration are
// immutable; budgets, the query log and the request-id cache are guarded by
// one mutex so each charge is linearizable.
class ExplanationService {
 public:
  ExplanationService(std::shared_ptr<const Classifier> model, ServiceConfig cfg);

  // Charges one unit per newly answered request; a repeated (key, id) pair
  // returns the cached answer without charging.
  Response handle(const ExplainRequest& request);
  // Wire entry point: one JSON request line in, one JSON response line out.
  std::string handle_line(std::string_view line);

  // Released explanation for `x` under this service's method, target-class
  // policy and defenses, without touching any budget. `remaining` is 0.
  ExplainResponse compute(std::span<const double> x, std::string_view request_id) const;
  std::uint64_t request_seed(std::string_view request_id) const;

  std::int64_t remaining(const std::string& key) const;
  std::int64_t used(const std::string& key) const;
  std::vector<QueryRecord> query_log() const;

  const ServiceConfig& config() const { return cfg_; }
  // Defense settings after startup calibration filled in any defaults.
  const DefenseConfig& defense() const { return cfg_.defense; }
  const Classifier& model() const { return *model_; }

 private:
  void calibrate();

  std::shared_ptr<const Classifier> model_;
  ServiceConfig cfg_;

  mutable std::mutex mu_;
  std::map<std::string, std::int64_t> remaining_;
  std::map<std::string, std::int64_t> used_;
  std::vector<QueryRecord> log_;
  std::map<std::pair<std::string, std::string>, std::shared_future<Response>> answered_;
};

// Serves an ExplanationService over TCP, one thread per connection.
class TcpServer {
 public:
  // Binds immediately; port 0 picks an ephemeral port. Throws on bind failure.
  TcpServer(ExplanationService& service, const std::string& host, std::uint16_t port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();
  void serve_connection(int fd);

  ExplanationService& service_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::set<int> client_fds_;
  std::vector<std::thread> workers_;
};

// "host:port" parsing shared by the server and client.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorCode code, const std::string& detail)
      : std::runtime_error(to_string(code) + ": " + detail), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Synchronous single-connection client. Transport failures trigger a
// reconnect and a resend with the same request id, which the server answers
// from its cache instead of charging twice.
class ServiceClient {
 public:
  ServiceClient(std::string host, std::uint16_t port, int max_attempts = 3,
                std::string id_prefix = "");
  ~ServiceClient();
  ServiceClient(const ServiceClient&) = delete;
  ServiceClient& operator=(const ServiceClient&) = delete;

  Response send(const ExplainRequest& request);
  std::string next_request_id();

 private:
  void connect_socket();
  void close_socket();

  std::string host_;
  std::uint16_t port_;
  int max_attempts_;
  std::string id_prefix_;
  std::uint64_t counter_ = 0;
  int fd_ = -1;
  std::string buffer_;
};

// What an attacker sees for one query.
struct QueryResult {
  std::vector<double> prediction;
  PartialExplanation explanation;
  std::int64_t remaining = 0;
};

// Converts a wire response; throws BudgetExhaustedError or ServiceError for
// error responses.
QueryResult to_query_result(const Response& response, std::size_t n_features);

class ExplanationOracle {
 public:
  virtual ~ExplanationOracle() = default;
  virtual QueryResult query(std::span<const double> x) = 0;
};

// In-process oracle backed by ExplanationService::handle.
class LocalOracle final : public ExplanationOracle {
 public:
  LocalOracle(ExplanationService& service, std::string api_key,
              std::string id_prefix = "local-");
  QueryResult query(std::span<const double> x) override;

 private:
  ExplanationService& service_;
  std::string key_;
  std::string id_prefix_;
  std::uint64_t counter_ = 0;
};

class RemoteOracle final : public ExplanationOracle {
 public:
  RemoteOracle(ServiceClient& client, std::string api_key);
  QueryResult query(std::span<const double> x) override;

 private:
  ServiceClient& client_;
  std::string key_;
};

struct BatchResult {
  std::vector<QueryResult> results;  // completed prefix, input order
  bool complete = true;
  bool budget_exhausted = false;
  std::string error;
};

BatchResult batch_explain(ExplanationOracle& oracle, const Matrix& x);

}  // namespace shapleak

#endif  // SHAPLEAK_SERVICE_H_
