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

#include "shapleak/defense.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shapleak/stats.h"

namespace shapleak {

double quantize_value(double v, int levels, double lo, double hi) {
  if (levels < 2) throw std::invalid_argument("quantization needs at least 2 levels");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("quantization range must satisfy lo < hi");
  }
  const double step = (hi - lo) / static_cast<double>(levels - 1);
  const double t = (v - lo) / step;
  const double j = std::clamp(std::ceil(t - 0.5), 0.0, static_cast<double>(levels - 1));
  return j == static_cast<double>(levels - 1) ? hi : lo + j * step;
}

Explanation quantize(const Explanation& e, int levels, double lo, double hi) {
  Explanation out = e;
  for (double& v : out.shapley) v = quantize_value(v, levels, lo, hi);
  return out;
}

std::vector<std::size_t> rank_by_shapley_variance(std::span<const Explanation> explanations) {
  if (explanations.size() < 2) {
    throw std::invalid_argument("variance ranking needs at least 2 explanations");
  }
  const std::size_t n = explanations.front().shapley.size();
  std::vector<double> variance(n);
  std::vector<double> column(explanations.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < explanations.size(); ++r) {
      if (explanations[r].shapley.size() != n) {
        throw std::invalid_argument("explanations differ in length");
      }
      column[r] = explanations[r].shapley[i];
    }
    // Order-independent accumulation so that permuting the set cannot flip
    // near-ties through rounding.
    std::ranges::sort(column);
    variance[i] = sample_variance(column);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return variance[a] > variance[b];
  });
  return order;
}

std::size_t PartialExplanation::released() const {
  return static_cast<std::size_t>(
      std::ranges::count_if(values, [](const auto& v) { return v.has_value(); }));
}

std::vector<double> PartialExplanation::filled(double fill) const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i].value_or(fill);
  return out;
}

PartialExplanation release_all(const Explanation& e) {
  PartialExplanation p;
  p.values.assign(e.shapley.begin(), e.shapley.end());
  p.target_class = e.target_class;
  p.method = e.method;
  p.reference_id = e.reference_id;
  return p;
}

PartialExplanation apply_topk(const Explanation& e, std::span<const std::size_t> indices) {
  PartialExplanation p;
  p.values.assign(e.shapley.size(), std::nullopt);
  for (std::size_t i : indices) {
    if (i >= e.shapley.size()) throw std::out_of_range("top-k index out of range");
    p.values[i] = e.shapley[i];
  }
  p.target_class = e.target_class;
  p.method = e.method;
  p.reference_id = e.reference_id;
  return p;
}

}  // namespace shapleak
