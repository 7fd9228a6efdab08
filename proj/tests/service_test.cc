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

#include <cstdlib>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "shapleak/service.h"
#include "test_util.h"

namespace shapleak {
namespace {

using testing::FnModel;
using testing::random_matrix;
using testing::TempDir;

// Three-class model with interactions so sampled explanations vary by seed.
std::shared_ptr<const Classifier> toy_model() {
  return std::make_shared<FnModel>(4, 3, [](std::span<const double> x, std::span<double> out) {
    out[0] = 2.0 * x[0] * x[1];
    out[1] = x[2] - x[3] * x[0];
    out[2] = 0.5 * x[3];
    softmax_inplace(out);
  });
}

ServiceConfig toy_config() {
  ServiceConfig cfg;
  cfg.method = ExplainMethod::sampled(20);
  cfg.seed = 42;
  cfg.reference = ReferenceSample{{0.1, 0.2, 0.3, 0.4}, 7};
  cfg.budgets = {{"alice", 5}, {"bob", 3}};
  return cfg;
}

ExplainRequest request(std::string id, std::string key, std::vector<double> x) {
  return ExplainRequest{std::move(id), std::move(key), "explain", std::move(x)};
}

const std::vector<double> kSample = {0.9, 0.8, 0.1, 0.5};

TEST(Service, ValidRequestMatchesDirectExplain) {
  const auto model = toy_model();
  ExplanationService service(model, toy_config());
  const auto response = std::get<ExplainResponse>(service.handle(request("q1", "alice", kSample)));
  EXPECT_EQ(response.id, "q1");
  EXPECT_EQ(response.prediction, model->predict(kSample));
  EXPECT_EQ(response.remaining, 4);
  EXPECT_EQ(response.target_policy, "top");
  const std::size_t top = static_cast<std::size_t>(
      std::max_element(response.prediction.begin(), response.prediction.end()) -
      response.prediction.begin());
  EXPECT_EQ(response.target_class, top);
  const auto direct = sampled_shapley_values(*model, kSample, toy_config().reference.values, top,
                                             20, 42 ^ fnv1a64("q1"));
  ASSERT_EQ(response.shapley.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(response.shapley[i].first, i);
    EXPECT_EQ(response.shapley[i].second, direct[i]);
  }
}

TEST(Service, FixedTargetClassIsEchoed) {
  ServiceConfig cfg = toy_config();
  cfg.target_class = TargetClassPolicy::fixed(2);
  ExplanationService service(toy_model(), cfg);
  const auto r = std::get<ExplainResponse>(service.handle(request("a", "alice", kSample)));
  EXPECT_EQ(r.target_class, 2u);
  EXPECT_EQ(r.target_policy, "fixed");
}

TEST(Service, BudgetExhaustion) {
  ExplanationService service(toy_model(), toy_config());
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(std::holds_alternative<ExplainResponse>(
        service.handle(request("b" + std::to_string(i), "bob", kSample))));
  }
  const auto refused = service.handle(request("b3", "bob", kSample));
  ASSERT_TRUE(std::holds_alternative<ErrorResponse>(refused));
  EXPECT_EQ(std::get<ErrorResponse>(refused).code, ErrorCode::kBudgetExhausted);
  const std::string line = service.handle_line(encode_request(request("b4", "bob", kSample)));
  EXPECT_EQ(line.find("shapley"), std::string::npos);
  EXPECT_EQ(line.find("prediction"), std::string::npos);
  EXPECT_EQ(service.used("bob"), 3);
  EXPECT_EQ(service.remaining("bob"), 0);
}

TEST(Service, MalformedRequests) {
  ExplanationService service(toy_model(), toy_config());
  for (const std::string& line :
       {std::string("not json"), std::string("{\"id\":\"x\"}"),
        std::string("{\"id\":\"x\",\"key\":\"alice\",\"op\":\"explain\",\"features\":[1]}"),
        std::string("{\"id\":\"x\",\"key\":\"alice\",\"op\":\"train\",\"features\":[1,2,3,4]}"),
        std::string("{\"id\":\"x\",\"key\":\"mallory\",\"op\":\"explain\",\"features\":[1,2,3,4]}")}) {
    const auto r = decode_response(service.handle_line(line));
    ASSERT_TRUE(std::holds_alternative<ErrorResponse>(r)) << line;
    EXPECT_EQ(std::get<ErrorResponse>(r).code, ErrorCode::kBadRequest) << line;
  }
  EXPECT_EQ(service.used("alice"), 0);
  EXPECT_EQ(service.remaining("alice"), 5);
}

TEST(Service, RepeatedRequestIdIsChargedOnce) {
  ExplanationService service(toy_model(), toy_config());
  const auto first = service.handle(request("same", "alice", kSample));
  const auto second = service.handle(request("same", "alice", kSample));
  EXPECT_EQ(first, second);
  EXPECT_EQ(service.used("alice"), 1);
  EXPECT_EQ(service.remaining("alice"), 4);
  EXPECT_EQ(service.query_log().size(), 1u);
}

TEST(Service, IdenticalIdsGiveIdenticalResponsesAcrossInstances) {
  ExplanationService a(toy_model(), toy_config());
  ExplanationService b(toy_model(), toy_config());
  EXPECT_EQ(a.handle(request("r", "alice", kSample)), b.handle(request("r", "alice", kSample)));
  EXPECT_NE(a.compute(kSample, "r1").shapley, a.compute(kSample, "r2").shapley);
}

TEST(Service, SeparateKeysHaveIndependentBudgets) {
  ExplanationService service(toy_model(), toy_config());
  for (int i = 0; i < 5; ++i) service.handle(request("a" + std::to_string(i), "alice", kSample));
  EXPECT_EQ(service.remaining("alice"), 0);
  EXPECT_EQ(service.remaining("bob"), 3);
  EXPECT_TRUE(std::holds_alternative<ExplainResponse>(
      service.handle(request("a0", "bob", kSample))));
}

TEST(Service, ConcurrentChargesAreConserved) {
  ServiceConfig cfg = toy_config();
  cfg.budgets = {{"k", 120}};
  ExplanationService service(toy_model(), cfg);
  std::atomic<int> answered{0}, refused{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        const auto r = service.handle(
            request("t" + std::to_string(t) + "-" + std::to_string(i), "k", kSample));
        if (std::holds_alternative<ExplainResponse>(r)) {
          ++answered;
        } else {
          ++refused;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(answered.load(), 120);
  EXPECT_EQ(refused.load(), 80);
  EXPECT_EQ(service.used("k"), 120);
  EXPECT_EQ(service.remaining("k"), 0);
  const auto log = service.query_log();
  ASSERT_EQ(log.size(), 120u);
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(log[i].queries_used, (std::int64_t)i + 1);
}

TEST(Service, QuantizedResponsesAreOnGrid) {
  ServiceConfig cfg = toy_config();
  cfg.defense.quantize_levels = 5;
  cfg.budgets = {{"k", 30}};
  ExplanationService service(toy_model(), cfg);
  ASSERT_TRUE(service.defense().quantize_range.has_value());
  const auto [lo, hi] = *service.defense().quantize_range;
  EXPECT_LT(lo, hi);
  const Matrix x = random_matrix(30, 4, 3);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto resp = std::get<ExplainResponse>(service.handle(
        request("q" + std::to_string(r),
                "k", std::vector<double>(x.row(r).begin(), x.row(r).end()))));
    EXPECT_EQ(resp.defense.quantize_levels, 5);
    for (const auto& [i, v] : resp.shapley) EXPECT_EQ(quantize_value(v, 5, lo, hi), v);
  }
}

TEST(Service, TopKReleasesExactlyK) {
  ServiceConfig cfg = toy_config();
  cfg.defense.topk = 2;
  ExplanationService service(toy_model(), cfg);
  ASSERT_TRUE(service.defense().topk_indices.has_value());
  auto released = *service.defense().topk_indices;
  std::ranges::sort(released);
  const auto resp = std::get<ExplainResponse>(service.handle(request("q", "alice", kSample)));
  ASSERT_EQ(resp.shapley.size(), 2u);
  ServiceConfig open = toy_config();
  const auto full = ExplanationService(toy_model(), open).compute(kSample, "q");
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(resp.shapley[k].first, released[k]);
    EXPECT_EQ(resp.shapley[k].second, full.shapley[released[k]].second);
  }
  EXPECT_EQ(resp.defense.topk, 2u);
}

TEST(Service, ExplicitTopKIndices) {
  ServiceConfig cfg = toy_config();
  cfg.defense.topk_indices = std::vector<std::size_t>{3, 0};
  ExplanationService service(toy_model(), cfg);
  EXPECT_EQ(service.defense().topk, 2u);
  const auto resp = service.compute(kSample, "z");
  EXPECT_EQ(resp.shapley[0].first, 0u);
  EXPECT_EQ(resp.shapley[1].first, 3u);
}

TEST(Service, RejectsInvalidConfigs) {
  ServiceConfig cfg = toy_config();
  cfg.reference.values.pop_back();
  EXPECT_THROW(ExplanationService(toy_model(), cfg), std::invalid_argument);
  cfg = toy_config();
  cfg.budgets["eve"] = -1;
  EXPECT_THROW(ExplanationService(toy_model(), cfg), std::invalid_argument);
  cfg = toy_config();
  cfg.defense.topk = 5;
  EXPECT_THROW(ExplanationService(toy_model(), cfg), std::invalid_argument);
  cfg = toy_config();
  cfg.target_class = TargetClassPolicy::fixed(3);
  EXPECT_THROW(ExplanationService(toy_model(), cfg), std::invalid_argument);
}

TEST(ServiceConfigFile, RoundTripAndEnvOverride) {
  TempDir dir;
  ServiceConfig cfg = toy_config();
  cfg.model_path = "model.json";
  cfg.defense.quantize_levels = 10;
  cfg.target_class = TargetClassPolicy::fixed(1);
  std::ofstream(dir / "svc.json") << service_config_to_json(cfg).dump(2);

  ::unsetenv(kListenEnvVar);
  const ServiceConfig back = load_service_config(dir / "svc.json");
  EXPECT_EQ(back.model_path, dir / "model.json");
  EXPECT_EQ(back.method, cfg.method);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.reference.values, cfg.reference.values);
  EXPECT_FALSE(back.target_class.top_predicted);
  EXPECT_EQ(back.target_class.fixed_class, 1u);
  EXPECT_EQ(back.defense.quantize_levels, 10);
  EXPECT_EQ(back.budgets, cfg.budgets);
  EXPECT_EQ(back.listen, "127.0.0.1:7070");

  ::setenv(kListenEnvVar, "127.0.0.1:9999", 1);
  EXPECT_EQ(load_service_config(dir / "svc.json").listen, "127.0.0.1:9999");
  ::unsetenv(kListenEnvVar);

  std::ofstream(dir / "bad.json") << R"({"model_path": "m", "explain": {"method": "magic"}})";
  EXPECT_THROW(load_service_config(dir / "bad.json"), FormatError);
}

TEST(Wire, RoundTrip) {
  const ExplainRequest req = request("id-1", "key", {0.1, 1.0 / 3.0, 1e-300});
  const auto back = decode_request(encode_request(req));
  EXPECT_EQ(back.id, req.id);
  EXPECT_EQ(back.features, req.features);

  ExplainResponse ok;
  ok.id = "id-1";
  ok.prediction = {0.25, 0.75};
  ok.target_class = 1;
  ok.shapley = {{0, 0.1 / 3.0}, {2, -2.0 / 7.0}};
  ok.method = ExplainMethod::sampled(50);
  ok.remaining = 9;
  ok.defense.topk = 2;
  EXPECT_EQ(decode_response(encode_response(ok)), Response(ok));
  const ErrorResponse err{"id-2", ErrorCode::kBudgetExhausted, "none left"};
  EXPECT_EQ(decode_response(encode_response(err)), Response(err));
  EXPECT_EQ(encode_response(ok).find('\n'), std::string::npos);
  EXPECT_THROW(decode_request("{\"id\": 3}"), FormatError);
}

TEST(Endpoint, Parse) {
  EXPECT_EQ(parse_endpoint("127.0.0.1:7070"), std::make_pair(std::string("127.0.0.1"),
                                                             std::uint16_t{7070}));
  EXPECT_THROW(parse_endpoint("localhost"), std::invalid_argument);
  EXPECT_THROW(parse_endpoint("h:99999"), std::invalid_argument);
}

TEST(Transport, LoopbackEqualsInProcess) {
  ExplanationService service(toy_model(), toy_config());
  TcpServer server(service, "127.0.0.1", 0);
  server.start();
  ServiceClient client("127.0.0.1", server.port());
  const auto over_tcp = std::get<ExplainResponse>(client.send(request("L1", "alice", kSample)));
  ExplainResponse in_process = service.compute(kSample, "L1");
  in_process.remaining = 4;
  EXPECT_EQ(over_tcp, in_process);
  // Resending the same id is answered from the cache.
  EXPECT_EQ(client.send(request("L1", "alice", kSample)), Response(over_tcp));
  EXPECT_EQ(service.used("alice"), 1);
  server.stop();
}

TEST(Transport, ReconnectsAfterServerRestart) {
  ExplanationService service(toy_model(), toy_config());
  auto server = std::make_unique<TcpServer>(service, "127.0.0.1", 0);
  const std::uint16_t port = server->port();
  server->start();
  ServiceClient client("127.0.0.1", port);
  ASSERT_TRUE(std::holds_alternative<ExplainResponse>(client.send(request("a", "alice", kSample))));
  server->stop();
  server.reset();
  server = std::make_unique<TcpServer>(service, "127.0.0.1", port);
  server->start();
  ASSERT_TRUE(std::holds_alternative<ExplainResponse>(client.send(request("b", "alice", kSample))));
  EXPECT_EQ(service.used("alice"), 2);
  server->stop();
}

TEST(Transport, UnreachableServer) {
  std::uint16_t port = 0;
  {
    ExplanationService service(toy_model(), toy_config());
    TcpServer probe(service, "127.0.0.1", 0);
    port = probe.port();
  }
  ServiceClient client("127.0.0.1", port, 2);
  EXPECT_THROW(client.send(request("x", "alice", kSample)), TransportError);
}

TEST(Transport, ConcurrentClients) {
  ServiceConfig cfg = toy_config();
  cfg.budgets = {{"k1", 40}, {"k2", 40}};
  ExplanationService service(toy_model(), cfg);
  TcpServer server(service, "127.0.0.1", 0);
  server.start();
  std::vector<std::thread> threads;
  for (const std::string key : {"k1", "k2"}) {
    threads.emplace_back([&, key] {
      ServiceClient client("127.0.0.1", server.port(), 3, key + "-");
      RemoteOracle oracle(client, key);
      const auto batch = batch_explain(oracle, random_matrix(50, 4, 1));
      EXPECT_EQ(batch.results.size(), 40u);
      EXPECT_TRUE(batch.budget_exhausted);
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(service.used("k1"), 40);
  EXPECT_EQ(service.used("k2"), 40);
  server.stop();
}

TEST(Batch, CostAndOrder) {
  ServiceConfig cfg = toy_config();
  cfg.budgets = {{"k", 1600}};
  ExplanationService service(toy_model(), cfg);
  LocalOracle oracle(service, "k");
  const Matrix x = random_matrix(100, 4, 5);
  const auto batch = batch_explain(oracle, x);
  EXPECT_TRUE(batch.complete);
  ASSERT_EQ(batch.results.size(), 100u);
  EXPECT_EQ(service.used("k"), 100);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    EXPECT_EQ(batch.results[r].prediction, service.model().predict(x.row(r)));
  }
  EXPECT_EQ(batch.results.back().remaining, 1500);

  const auto empty = batch_explain(oracle, Matrix(0, 4));
  EXPECT_TRUE(empty.results.empty());
  EXPECT_EQ(service.used("k"), 100);

  const auto big = batch_explain(oracle, random_matrix(1500, 4, 6));
  EXPECT_TRUE(big.complete);
  EXPECT_EQ(service.used("k"), 1600);
}

TEST(Batch, PartialFailureKeepsPrefix) {
  ExplanationService service(toy_model(), toy_config());
  LocalOracle oracle(service, "bob");
  const auto batch = batch_explain(oracle, random_matrix(5, 4, 5));
  EXPECT_FALSE(batch.complete);
  EXPECT_TRUE(batch.budget_exhausted);
  EXPECT_EQ(batch.results.size(), 3u);
  EXPECT_FALSE(batch.error.empty());

  LocalOracle unknown(service, "nobody");
  const auto refused = batch_explain(unknown, random_matrix(2, 4, 5));
  EXPECT_FALSE(refused.complete);
  EXPECT_FALSE(refused.budget_exhausted);
  EXPECT_TRUE(refused.results.empty());
}

TEST(QueryResult, ReleasedEntriesOnly) {
  ExplainResponse ok;
  ok.prediction = {0.5, 0.5};
  ok.shapley = {{1, 0.25}};
  const auto q = to_query_result(ok, 3);
  EXPECT_FALSE(q.explanation.values[0].has_value());
  EXPECT_EQ(q.explanation.values[1], 0.25);
  ok.shapley = {{3, 0.25}};
  EXPECT_THROW(to_query_result(ok, 3), FormatError);
  EXPECT_THROW(to_query_result(ErrorResponse{"i", ErrorCode::kBudgetExhausted, ""}, 3),
               BudgetExhaustedError);
  EXPECT_THROW(to_query_result(ErrorResponse{"i", ErrorCode::kInternal, ""}, 3), ServiceError);
}

}  // namespace
}  // namespace shapleak
