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

#ifndef SHAPLEAK_ATTACK2_H_
#define SHAPLEAK_ATTACK2_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapleak/common.h"

namespace shapleak {

struct Attack2Config {
  std::size_t queries = 100;  // random query count m
  std::size_t min_candidates = 30;
  double tau = 0.4;
  // Distance threshold; unset means xi_fraction * r.
  std::optional<double> xi;
  double xi_fraction = 0.2;
  // Use a separate r per feature instead of one global range.
  bool per_feature_range = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Used as xi when the explanations have zero range.
inline constexpr double kXiFloor = 1e-6;

// One reconstructed input; an empty optional is an abstention.
struct Reconstruction {
  std::vector<std::optional<double>> values;
  std::vector<std::pair<double, double>> ranges;  // candidate [min, max]
  std::vector<std::size_t> counts;                // candidate-set sizes

  std::size_t recovered() const;
};

// m x n matrix of independent U(0,1) draws.
Matrix gen_random_queries(std::size_t n, std::size_t m, std::uint64_t seed);

// max - min over every entry of the explanation set.
double shap_range(const Matrix& shapley);
std::vector<double> shap_range_per_feature(const Matrix& shapley);

// Per-feature distance thresholds implied by `cfg` and the available set.
std::vector<double> resolve_xi(const Attack2Config& cfg, const Matrix& s_rand);

// Nearest-Shapley interpolation. Rows of x_rand and s_rand are aligned.
Reconstruction run_attack2(std::span<const double> s_target, const Matrix& x_rand,
                           const Matrix& s_rand, const Attack2Config& cfg,
                           std::span<const double> xi);
Reconstruction run_attack2(std::span<const double> s_target, const Matrix& x_rand,
                           const Matrix& s_rand, const Attack2Config& cfg);

struct BoundReport {
  double u = 0.0;
  double w = 0.0;
  std::size_t k = 0;
  double a = 0.0;
  double b = 0.0;
  double error_radius = 0.0;
  double confidence = 0.0;
};

// Radius u(b-a)/2 + w holds with the returned probability (clamped to [0, 1]).
BoundReport error_bound(double u, double w, std::size_t k, double a, double b);

// Non-abstained cells over all cells.
double success_rate(std::span<const Reconstruction> reconstructions);

nlohmann::json reconstruction_to_json(const Reconstruction& r);
Reconstruction reconstruction_from_json(const nlohmann::json& j);
void save_reconstructions(std::span<const Reconstruction> reconstructions,
                          const std::filesystem::path& path);
std::vector<Reconstruction> load_reconstructions(const std::filesystem::path& path);

}  // namespace shapleak

#endif  // SHAPLEAK_ATTACK2_H_
