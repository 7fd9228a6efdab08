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

#ifndef SHAPLEAK_WIRE_H_
#define SHAPLEAK_WIRE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "shapleak/explain.h"

namespace shapleak {

// Line-delimited JSON messages exchanged with the explanation service.
//
// Request:  {"id": str, "key": str, "op": "explain", "features": [n reals]}
// Response: {"id": str, "prediction": [c reals], "target_class": int,
//            "shapley": [{"index": int, "value": real}...],
//            "method": {"type": "exact"|"sampled", "nu": int?},
//            "remaining": int, "target_policy": "top"|"fixed",
//            "defense": {"quantize_levels": int?, "topk": int?}}
// Error:    {"id": str, "error": "BAD_REQUEST"|"BUDGET_EXHAUSTED"|"INTERNAL",
//            "detail": str}

struct ExplainRequest {
  std::string id;
  std::string key;
  std::string op = "explain";
  std::vector<double> features;
};

struct DefenseEcho {
  std::optional<int> quantize_levels;
  std::optional<std::size_t> topk;
  friend bool operator==(const DefenseEcho&, const DefenseEcho&) = default;
};

struct ExplainResponse {
  std::string id;
  std::vector<double> prediction;
  std::size_t target_class = 0;
  std::vector<std::pair<std::size_t, double>> shapley;  // (index, value), ascending index
  ExplainMethod method;
  std::int64_t remaining = 0;
  std::string target_policy = "top";
  DefenseEcho defense;

  friend bool operator==(const ExplainResponse&, const ExplainResponse&) = default;
};

enum class ErrorCode { kBadRequest, kBudgetExhausted, kInternal };

std::string to_string(ErrorCode code);

struct ErrorResponse {
  std::string id;
  ErrorCode code = ErrorCode::kInternal;
  std::string detail;

  friend bool operator==(const ErrorResponse&, const ErrorResponse&) = default;
};

using Response = std::variant<ExplainResponse, ErrorResponse>;

// Encoders emit a single line without the trailing newline.
std::string encode_request(const ExplainRequest& request);
std::string encode_response(const Response& response);

// Throw FormatError on malformed input.
ExplainRequest decode_request(std::string_view line);
Response decode_response(std::string_view line);

}  // namespace shapleak

#endif  // SHAPLEAK_WIRE_H_
