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

#ifndef SHAPLEAK_DEFENSE_H_
#define SHAPLEAK_DEFENSE_H_

#include <optional>
#include <span>
#include <vector>

#include "shapleak/explain.h"

namespace shapleak {

struct DefenseConfig {
  std::optional<int> quantize_levels;
  // Grid endpoints; when unset the service calibrates them at startup.
  std::optional<std::pair<double, double>> quantize_range;
  std::optional<std::size_t> topk;
  // Released feature set; when unset the service ranks features by Shapley
  // variance over its calibration batch.
  std::optional<std::vector<std::size_t>> topk_indices;

  bool active() const { return quantize_levels.has_value() || topk.has_value(); }
};

// Snaps v to the nearest of `levels` evenly spaced points on [lo, hi]; exact
// midpoints go to the lower point.
double quantize_value(double v, int levels, double lo, double hi);
Explanation quantize(const Explanation& e, int levels, double lo, double hi);

// Feature indices ordered by descending variance of s_i across the set;
// ties keep the lower index first.
std::vector<std::size_t> rank_by_shapley_variance(std::span<const Explanation> explanations);

// Explanation with withheld entries marked absent.
struct PartialExplanation {
  std::vector<std::optional<double>> values;
  std::size_t target_class = 0;
  ExplainMethod method;
  std::string reference_id;

  std::size_t released() const;
  // Missing entries replaced by `fill`.
  std::vector<double> filled(double fill = 0.0) const;
};

PartialExplanation release_all(const Explanation& e);
PartialExplanation apply_topk(const Explanation& e, std::span<const std::size_t> indices);

}  // namespace shapleak

#endif  // SHAPLEAK_DEFENSE_H_
