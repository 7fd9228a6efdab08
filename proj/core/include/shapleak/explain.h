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

#ifndef SHAPLEAK_EXPLAIN_H_
#define SHAPLEAK_EXPLAIN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapleak/models.h"

namespace shapleak {

enum class ExplainMethodType { kExact, kSampled };

struct ExplainMethod {
  ExplainMethodType type = ExplainMethodType::kExact;
  int nu = 0;  // permutations, sampled only

  static ExplainMethod exact() { return {}; }
  static ExplainMethod sampled(int nu) { return {ExplainMethodType::kSampled, nu}; }
  friend bool operator==(const ExplainMethod&, const ExplainMethod&) = default;
};

// Baseline x0 whose entries stand in for "absent" features.
struct ReferenceSample {
  std::vector<double> values;
  std::int64_t source = -1;  // row in the training data, -1 if synthetic

  std::string id() const;
};

struct Explanation {
  std::vector<double> shapley;
  std::size_t target_class = 0;
  ExplainMethod method;
  std::string reference_id;
  std::uint64_t seed = 0;  // sampled only
};

// Entry j is x[j] when j is in `subset`, otherwise x0[j]. Indices are 0-based.
std::vector<double> compose_masked(std::span<const double> x, std::span<const double> x0,
                                   std::span<const std::size_t> subset);

inline constexpr std::size_t kMaxExactFeatures = 20;

// Full 2^n subset enumeration; refuses n > kMaxExactFeatures.
std::vector<double> exact_shapley_values(const Classifier& model, std::span<const double> x,
                                         std::span<const double> x0, std::size_t target_class);
Explanation exact_shapley(const Classifier& model, std::span<const double> x,
                          const ReferenceSample& reference, std::size_t target_class);

// ceil(ln(2/delta) * r_m^2 / (2 epsilon^2)).
std::uint64_t permutations_needed(double delta, double epsilon, double marginal_range = 1.0);

// Permutation sampling. Permutation k draws from an RNG seeded with
// derive_seed(seed, k), so the result does not depend on evaluation order.
std::vector<double> sampled_shapley_values(const Classifier& model, std::span<const double> x,
                                           std::span<const double> x0,
                                           std::size_t target_class, int nu,
                                           std::uint64_t seed);
Explanation sampled_shapley(const Classifier& model, std::span<const double> x,
                            const ReferenceSample& reference, std::size_t target_class,
                            int nu, std::uint64_t seed);

Explanation explain(const Classifier& model, std::span<const double> x,
                    const ReferenceSample& reference, std::size_t target_class,
                    const ExplainMethod& method, std::uint64_t seed);

// Per-feature unbiased variance of the explanation across `trials`
// independently seeded runs.
std::vector<double> estimate_noise_var(const Classifier& model, std::span<const double> x,
                                       const ReferenceSample& reference,
                                       std::size_t target_class, const ExplainMethod& method,
                                       int trials, std::uint64_t seed);

struct MutualInformation {
  double bits = 0.0;
  bool noise_dominated = false;
};

// 0.5 * log2(var_s / var_eps) under a Gaussian signal-plus-noise model.
MutualInformation mi_gaussian(double var_s, double var_eps);

struct GaussianFitTest {
  double statistic = 0.0;
  double p_value = 0.0;
  int degrees_of_freedom = 0;
};

// Chi-square goodness of fit against N(sample mean, sample variance) using
// `n_bins` equiprobable bins and n_bins - 3 degrees of freedom.
GaussianFitTest gaussian_fit_test(std::span<const double> values, int n_bins = 10);

nlohmann::json explanation_to_json(const Explanation& e);
Explanation explanation_from_json(const nlohmann::json& j);
void save_explanations(std::span<const Explanation> explanations,
                       const std::filesystem::path& path);
std::vector<Explanation> load_explanations(const std::filesystem::path& path);

}  // namespace shapleak

#endif  // SHAPLEAK_EXPLAIN_H_
