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

#include "shapleak/wire.h"

#include <cmath>

#include <nlohmann/json.hpp>

#include "json_util.h"

namespace shapleak {
namespace {

using nlohmann::json;

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadRequest:
      return "BAD_REQUEST";
    case ErrorCode::kBudgetExhausted:
      return "BUDGET_EXHAUSTED";
    case ErrorCode::kInternal:
      return "INTERNAL";
  }
  return "INTERNAL";
}

std::string encode_request(const ExplainRequest& request) {
  json j = {{"id", request.id},
            {"key", request.key},
            {"op", request.op},
            {"features", request.features}};
  return j.dump();
}

ExplainRequest decode_request(std::string_view line) {
  const json j = parse_line(line);
  if (!j.is_object()) throw FormatError("request must be a JSON object");
  ExplainRequest r;
  try {
    r.id = j.at("id").get<std::string>();
    r.key = j.at("key").get<std::string>();
    r.op = j.at("op").get<std::string>();
    const auto& features = j.at("features");
    if (!features.is_array()) throw FormatError("'features' must be an array");
    for (const auto& v : features) {
      if (!v.is_number()) throw FormatError("'features' must hold numbers");
      r.features.push_back(v.get<double>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad request: ") + e.what());
  }
  return r;
}

std::string encode_response(const Response& response) {
  json j;
  if (const auto* ok = std::get_if<ExplainResponse>(&response)) {
    json shapley = json::array();
    for (const auto& [index, value] : ok->shapley) {
      shapley.push_back({{"index", index}, {"value", value}});
    }
    json method = {{"type", ok->method.type == ExplainMethodType::kExact ? "exact" : "sampled"}};
    if (ok->method.type == ExplainMethodType::kSampled) method["nu"] = ok->method.nu;
    json defense = json::object();
    if (ok->defense.quantize_levels) defense["quantize_levels"] = *ok->defense.quantize_levels;
    if (ok->defense.topk) defense["topk"] = *ok->defense.topk;
    j = {{"id", ok->id},
         {"prediction", ok->prediction},
         {"target_class", ok->target_class},
         {"shapley", shapley},
         {"method", method},
         {"remaining", ok->remaining},
         {"target_policy", ok->target_policy},
         {"defense", defense}};
  } else {
    const auto& err = std::get<ErrorResponse>(response);
    j = {{"id", err.id}, {"error", to_string(err.code)}, {"detail", err.detail}};
  }
  return j.dump();
}

Response decode_response(std::string_view line) {
  const json j = parse_line(line);
  if (!j.is_object()) throw FormatError("response must be a JSON object");
  try {
    if (j.contains("error")) {
      ErrorResponse err;
      err.id = j.at("id").get<std::string>();
      const auto code = j.at("error").get<std::string>();
      if (code == "BAD_REQUEST") {
        err.code = ErrorCode::kBadRequest;
      } else if (code == "BUDGET_EXHAUSTED") {
        err.code = ErrorCode::kBudgetExhausted;
      } else if (code == "INTERNAL") {
        err.code = ErrorCode::kInternal;
      } else {
        throw FormatError("unknown error code '" + code + "'");
      }
      err.detail = j.value("detail", "");
      return err;
    }
    ExplainResponse ok;
    ok.id = j.at("id").get<std::string>();
    ok.prediction = j.at("prediction").get<std::vector<double>>();
    ok.target_class = j.at("target_class").get<std::size_t>();
    for (const auto& entry : j.at("shapley")) {
      ok.shapley.emplace_back(entry.at("index").get<std::size_t>(),
                              entry.at("value").get<double>());
    }
    const auto& method = j.at("method");
    const auto type = method.at("type").get<std::string>();
    if (type == "exact") {
      ok.method = ExplainMethod::exact();
    } else if (type == "sampled") {
      ok.method = ExplainMethod::sampled(method.at("nu").get<int>());
    } else {
      throw FormatError("unknown method type '" + type + "'");
    }
    ok.remaining = j.at("remaining").get<std::int64_t>();
    ok.target_policy = j.value("target_policy", "top");
    if (j.contains("defense")) {
      const auto& d = j.at("defense");
      if (d.contains("quantize_levels")) ok.defense.quantize_levels = d.at("quantize_levels").get<int>();
      if (d.contains("topk")) ok.defense.topk = d.at("topk").get<std::size_t>();
    }
    return ok;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad response: ") + e.what());
  }
}

}  // namespace shapleak
