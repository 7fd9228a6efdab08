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

#include "shapleak/service.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>

#include "json_util.h"

namespace shapleak {
namespace {

constexpr std::uint64_t kCalibrationStream = 0xca11b8a7e;

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t sent = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(sent));
  }
  return true;
}

// Reads one '\n'-terminated line into `line`; `buffer` carries leftovers.
bool read_line(int fd, std::string& buffer, std::string& line) {
  while (true) {
    const auto pos = buffer.find('\n');
    if (pos != std::string::npos) {
      line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      return true;
    }
    char chunk[4096];
    const ssize_t got = ::recv(fd, chunk, sizeof(chunk), 0);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(got));
  }
}

std::uint64_t hash_sample(std::span<const double> x) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(x.data()),
                                  x.size() * sizeof(double)));
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::ranges::max_element(v) - v.begin());
}

}  // namespace

// --- configuration -------------------------------------------------------

ServiceConfig service_config_from_json(const nlohmann::json& doc) {
  using internal::field;
  ServiceConfig cfg;
  try {
    cfg.model_path = field<std::string>(doc, "model_path");
    const auto& ej = doc.at("explain");
    const auto method = field<std::string>(ej, "method");
    if (method == "exact") {
      cfg.method = ExplainMethod::exact();
    } else if (method == "sampled") {
      cfg.method = ExplainMethod::sampled(field<int>(ej, "nu"));
    } else {
      throw FormatError("explain.method must be 'exact' or 'sampled'");
    }
    cfg.seed = ej.value("seed", std::uint64_t{0});
    const auto& rj = doc.at("reference");
    cfg.reference.values = field<std::vector<double>>(rj, "values");
    cfg.reference.source = rj.value("source", std::int64_t{-1});
    if (doc.contains("target_class")) {
      const auto& tj = doc.at("target_class");
      if (tj.is_string() && tj.get<std::string>() == "top") {
        cfg.target_class = TargetClassPolicy::top();
      } else if (tj.is_number_integer() && tj.get<std::int64_t>() >= 0) {
        cfg.target_class = TargetClassPolicy::fixed(tj.get<std::size_t>());
      } else {
        throw FormatError("target_class must be \"top\" or a class index");
      }
    }
    if (doc.contains("defense")) {
      const auto& dj = doc.at("defense");
      if (dj.contains("quantize_levels")) cfg.defense.quantize_levels = field<int>(dj, "quantize_levels");
      if (dj.contains("quantize_range")) {
        const auto range = field<std::vector<double>>(dj, "quantize_range");
        if (range.size() != 2) throw FormatError("quantize_range needs [lo, hi]");
        cfg.defense.quantize_range = std::make_pair(range[0], range[1]);
      }
      if (dj.contains("topk")) cfg.defense.topk = field<std::size_t>(dj, "topk");
      if (dj.contains("topk_indices")) {
        cfg.defense.topk_indices = field<std::vector<std::size_t>>(dj, "topk_indices");
      }
    }
    cfg.budgets = field<std::map<std::string, std::int64_t>>(doc, "budgets");
    cfg.listen = doc.value("listen", cfg.listen);
    cfg.calibration_size = doc.value("calibration_size", cfg.calibration_size);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("service config: ") + e.what());
  }
  return cfg;
}

nlohmann::json service_config_to_json(const ServiceConfig& cfg) {
  nlohmann::json explain = {
      {"method", cfg.method.type == ExplainMethodType::kExact ? "exact" : "sampled"},
      {"seed", cfg.seed}};
  if (cfg.method.type == ExplainMethodType::kSampled) explain["nu"] = cfg.method.nu;
  nlohmann::json defense = nlohmann::json::object();
  if (cfg.defense.quantize_levels) defense["quantize_levels"] = *cfg.defense.quantize_levels;
  if (cfg.defense.quantize_range) {
    defense["quantize_range"] = {cfg.defense.quantize_range->first,
                                 cfg.defense.quantize_range->second};
  }
  if (cfg.defense.topk) defense["topk"] = *cfg.defense.topk;
  if (cfg.defense.topk_indices) defense["topk_indices"] = *cfg.defense.topk_indices;
  nlohmann::json target = cfg.target_class.top_predicted
                              ? nlohmann::json("top")
                              : nlohmann::json(cfg.target_class.fixed_class);
  return {{"model_path", cfg.model_path.string()},
          {"explain", explain},
          {"reference", {{"values", cfg.reference.values}, {"source", cfg.reference.source}}},
          {"target_class", target},
          {"defense", defense},
          {"budgets", cfg.budgets},
          {"listen", cfg.listen},
          {"calibration_size", cfg.calibration_size}};
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  ServiceConfig cfg = service_config_from_json(internal::read_json_file(path));
  if (cfg.model_path.is_relative()) cfg.model_path = path.parent_path() / cfg.model_path;
  if (const char* env = std::getenv(kListenEnvVar); env != nullptr && *env != '\0') {
    cfg.listen = env;
  }
  return cfg;
}

// --- service -------------------------------------------------------------

ExplanationService::ExplanationService(std::shared_ptr<const Classifier> model,
                                       ServiceConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
  if (!model_) throw std::invalid_argument("service needs a model");
  if (cfg_.reference.values.size() != model_->n_inputs()) {
    throw std::invalid_argument("reference length does not match the model input width");
  }
  if (cfg_.method.type == ExplainMethodType::kSampled && cfg_.method.nu < 1) {
    throw std::invalid_argument("sampled method needs nu >= 1");
  }
  if (cfg_.method.type == ExplainMethodType::kExact && model_->n_inputs() > kMaxExactFeatures) {
    throw std::invalid_argument("exact method refused for this many features");
  }
  if (!cfg_.target_class.top_predicted && cfg_.target_class.fixed_class >= model_->n_classes()) {
    throw std::invalid_argument("fixed target class out of range");
  }
  for (const auto& [key, budget] : cfg_.budgets) {
    if (budget < 0) throw std::invalid_argument("budget for '" + key + "' is negative");
  }
  if (cfg_.defense.quantize_levels && *cfg_.defense.quantize_levels < 2) {
    throw std::invalid_argument("quantize_levels must be at least 2");
  }
  if (cfg_.defense.topk && *cfg_.defense.topk > model_->n_inputs()) {
    throw std::invalid_argument("topk exceeds the number of features");
  }
  calibrate();
  remaining_ = cfg_.budgets;
}

void ExplanationService::calibrate() {
  auto& defense = cfg_.defense;
  const bool need_range = defense.quantize_levels && !defense.quantize_range;
  const bool need_ranking = defense.topk && !defense.topk_indices;
  if (defense.topk_indices) {
    if (!defense.topk) defense.topk = defense.topk_indices->size();
    if (defense.topk_indices->size() != *defense.topk) {
      throw std::invalid_argument("topk_indices length differs from topk");
    }
    for (std::size_t i : *defense.topk_indices) {
      if (i >= model_->n_inputs()) throw std::invalid_argument("topk index out of range");
    }
  }
  if (!need_range && !need_ranking) return;
  if (cfg_.calibration_size < 2) throw std::invalid_argument("calibration batch too small");

  const std::size_t n = model_->n_inputs();
  Rng rng(derive_seed(cfg_.seed, kCalibrationStream));
  std::vector<Explanation> batch;
  std::vector<double> x(n), probs(model_->n_classes());
  for (std::size_t b = 0; b < cfg_.calibration_size; ++b) {
    for (double& v : x) v = uniform01(rng);
    model_->predict_into(x, probs);
    const std::size_t target =
        cfg_.target_class.top_predicted ? argmax(probs) : cfg_.target_class.fixed_class;
    batch.push_back(explain(*model_, x, cfg_.reference, target, cfg_.method,
                            derive_seed(cfg_.seed ^ kCalibrationStream, b)));
  }
  if (need_range) {
    double lo = batch.front().shapley.front();
    double hi = lo;
    for (const auto& e : batch) {
      for (double v : e.shapley) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(lo < hi)) hi = lo + 1.0;
    defense.quantize_range = std::make_pair(lo, hi);
  }
  if (need_ranking) {
    auto ranking = rank_by_shapley_variance(batch);
    ranking.resize(*defense.topk);
    defense.topk_indices = std::move(ranking);
  }
}

std::uint64_t ExplanationService::request_seed(std::string_view request_id) const {
  return cfg_.seed ^ fnv1a64(request_id);
}

ExplainResponse ExplanationService::compute(std::span<const double> x,
                                            std::string_view request_id) const {
  ExplainResponse r;
  r.id = std::string(request_id);
  r.prediction = model_->predict(x);
  r.target_class =
      cfg_.target_class.top_predicted ? argmax(r.prediction) : cfg_.target_class.fixed_class;
  r.target_policy = cfg_.target_class.top_predicted ? "top" : "fixed";
  r.method = cfg_.method;
  Explanation e =
      explain(*model_, x, cfg_.reference, r.target_class, cfg_.method, request_seed(request_id));
  const auto& defense = cfg_.defense;
  if (defense.quantize_levels) {
    e = quantize(e, *defense.quantize_levels, defense.quantize_range->first,
                 defense.quantize_range->second);
    r.defense.quantize_levels = defense.quantize_levels;
  }
  if (defense.topk) {
    std::vector<std::size_t> released = *defense.topk_indices;
    std::ranges::sort(released);
    for (std::size_t i : released) r.shapley.emplace_back(i, e.shapley[i]);
    r.defense.topk = defense.topk;
  } else {
    for (std::size_t i = 0; i < e.shapley.size(); ++i) r.shapley.emplace_back(i, e.shapley[i]);
  }
  return r;
}

Response ExplanationService::handle(const ExplainRequest& request) {
  if (request.op != "explain") {
    return ErrorResponse{request.id, ErrorCode::kBadRequest, "unsupported op '" + request.op + "'"};
  }
  if (request.id.empty()) {
    return ErrorResponse{request.id, ErrorCode::kBadRequest, "missing request id"};
  }
  if (request.features.size() != model_->n_inputs()) {
    return ErrorResponse{request.id, ErrorCode::kBadRequest,
                         "expected " + std::to_string(model_->n_inputs()) + " features"};
  }
  if (!std::ranges::all_of(request.features, [](double v) { return std::isfinite(v); })) {
    return ErrorResponse{request.id, ErrorCode::kBadRequest, "features must be finite"};
  }

  std::promise<Response> promise;
  {
    std::unique_lock lock(mu_);
    const auto cache_key = std::make_pair(request.key, request.id);
    if (auto it = answered_.find(cache_key); it != answered_.end()) {
      auto future = it->second;
      lock.unlock();
      return future.get();
    }
    auto budget = remaining_.find(request.key);
    if (budget == remaining_.end()) {
      return ErrorResponse{request.id, ErrorCode::kBadRequest, "unknown api key"};
    }
    if (budget->second <= 0) {
      return ErrorResponse{request.id, ErrorCode::kBudgetExhausted,
                           "no queries left for this key"};
    }
    --budget->second;
    answered_.emplace(cache_key, promise.get_future().share());
  }

  Response response;
  bool charged = true;
  try {
    ExplainResponse ok = compute(request.features, request.id);
    std::lock_guard lock(mu_);
    ok.remaining = remaining_.at(request.key);
    const std::int64_t used = ++used_[request.key];
    log_.push_back({request.key, std::chrono::system_clock::now(),
                    hash_sample(request.features), used});
    response = std::move(ok);
  } catch (const std::exception& e) {
    charged = false;
    response = ErrorResponse{request.id, ErrorCode::kInternal, e.what()};
  }
  if (!charged) {
    std::lock_guard lock(mu_);
    ++remaining_.at(request.key);
    answered_.erase(std::make_pair(request.key, request.id));
  }
  promise.set_value(response);
  return response;
}

std::string ExplanationService::handle_line(std::string_view line) {
  ExplainRequest request;
  try {
    request = decode_request(line);
  } catch (const FormatError& e) {
    std::string id;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
    return encode_response(ErrorResponse{id, ErrorCode::kBadRequest, e.what()});
  }
  return encode_response(handle(request));
}

std::int64_t ExplanationService::remaining(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = remaining_.find(key);
  return it == remaining_.end() ? 0 : it->second;
}

std::int64_t ExplanationService::used(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = used_.find(key);
  return it == used_.end() ? 0 : it->second;
}

std::vector<QueryRecord> ExplanationService::query_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

// --- TCP transport -------------------------------------------------------

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint must be host:port");
  const std::string host = endpoint.substr(0, colon);
  const std::string port_text = endpoint.substr(colon + 1);
  char* end = nullptr;
  const long port = std::strtol(port_text.c_str(), &end, 10);
  if (host.empty() || port_text.empty() || *end != '\0' || port < 0 || port > 65535) {
    throw std::invalid_argument("bad endpoint '" + endpoint + "'");
  }
  return {host, static_cast<std::uint16_t>(port)};
}

TcpServer::TcpServer(ExplanationService& service, const std::string& host, std::uint16_t port)
    : service_(service) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string bind_host = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::invalid_argument("cannot parse listen address '" + host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + ": " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::start() {
  if (running_.exchange(true)) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  {
    std::lock_guard lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void TcpServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void TcpServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    client_fds_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpServer::serve_connection(int fd) {
  std::string buffer, line;
  while (running_ && read_line(fd, buffer, line)) {
    if (line.empty()) continue;
    const std::string reply = service_.handle_line(line) + "\n";
    if (!send_all(fd, reply)) break;
  }
  std::lock_guard lock(mu_);
  client_fds_.erase(fd);
  ::close(fd);
}

ServiceClient::ServiceClient(std::string host, std::uint16_t port, int max_attempts,
                             std::string id_prefix)
    : host_(std::move(host)), port_(port), max_attempts_(std::max(1, max_attempts)),
      id_prefix_(std::move(id_prefix)) {
  if (id_prefix_.empty()) {
    std::random_device rd;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%08x%08x-", rd(), rd());
    id_prefix_ = buf;
  }
}

ServiceClient::~ServiceClient() { close_socket(); }

std::string ServiceClient::next_request_id() {
  return id_prefix_ + std::to_string(counter_++);
}

void ServiceClient::connect_socket() {
  close_socket();
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &found) != 0 || found == nullptr) {
    throw TransportError("cannot resolve " + host_);
  }
  const int fd = ::socket(found->ai_family, found->ai_socktype, found->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(found);
    throw TransportError(std::string("socket: ") + std::strerror(errno));
  }
  const int rc = ::connect(fd, found->ai_addr, found->ai_addrlen);
  ::freeaddrinfo(found);
  if (rc != 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd);
    throw TransportError("cannot connect to " + host_ + ":" + port + ": " + reason);
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
  buffer_.clear();
}

void ServiceClient::close_socket() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

Response ServiceClient::send(const ExplainRequest& request) {
  const std::string line = encode_request(request) + "\n";
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < max_attempts_; ++attempt) {
    try {
      if (fd_ < 0) connect_socket();
      std::string reply;
      if (send_all(fd_, line) && read_line(fd_, buffer_, reply)) {
        return decode_response(reply);
      }
      last_error = "connection lost";
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    close_socket();
  }
  throw TransportError("request " + request.id + " failed after " +
                       std::to_string(max_attempts_) + " attempts: " + last_error);
}

// --- oracles -------------------------------------------------------------

QueryResult to_query_result(const Response& response, std::size_t n_features) {
  if (const auto* err = std::get_if<ErrorResponse>(&response)) {
    if (err->code == ErrorCode::kBudgetExhausted) throw BudgetExhaustedError(err->detail);
    throw ServiceError(err->code, err->detail);
  }
  const auto& ok = std::get<ExplainResponse>(response);
  QueryResult q;
  q.prediction = ok.prediction;
  q.remaining = ok.remaining;
  q.explanation.values.assign(n_features, std::nullopt);
  for (const auto& [index, value] : ok.shapley) {
    if (index >= n_features) throw FormatError("response Shapley index out of range");
    q.explanation.values[index] = value;
  }
  q.explanation.target_class = ok.target_class;
  q.explanation.method = ok.method;
  return q;
}

LocalOracle::LocalOracle(ExplanationService& service, std::string api_key, std::string id_prefix)
    : service_(service), key_(std::move(api_key)), id_prefix_(std::move(id_prefix)) {}

QueryResult LocalOracle::query(std::span<const double> x) {
  ExplainRequest request{id_prefix_ + std::to_string(counter_++), key_, "explain",
                         std::vector<double>(x.begin(), x.end())};
  return to_query_result(service_.handle(request), x.size());
}

RemoteOracle::RemoteOracle(ServiceClient& client, std::string api_key)
    : client_(client), key_(std::move(api_key)) {}

QueryResult RemoteOracle::query(std::span<const double> x) {
  ExplainRequest request{client_.next_request_id(), key_, "explain",
                         std::vector<double>(x.begin(), x.end())};
  return to_query_result(client_.send(request), x.size());
}

BatchResult batch_explain(ExplanationOracle& oracle, const Matrix& x) {
  BatchResult batch;
  batch.results.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    try {
      batch.results.push_back(oracle.query(x.row(r)));
    } catch (const BudgetExhaustedError& e) {
      batch.complete = false;
      batch.budget_exhausted = true;
      batch.error = e.what();
      break;
    } catch (const std::exception& e) {
      batch.complete = false;
      batch.error = e.what();
      break;
    }
  }
  return batch;
}

}  // namespace shapleak
