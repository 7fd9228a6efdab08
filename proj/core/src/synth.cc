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

#include "shapleak/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shapleak {

int SynthConfig::n_important() const {
  return static_cast<int>(std::lround(important_fraction * n_features));
}

void SynthConfig::validate() const {
  const bool allowed = important_fraction == 0.25 || important_fraction == 0.5 ||
                       important_fraction == 0.75;
  if (!allowed) {
    throw std::invalid_argument("important_fraction must be 0.25, 0.5 or 0.75");
  }
  if (n_features < 1 || n_samples < 1) {
    throw std::invalid_argument("n_features and n_samples must be positive");
  }
  if (std::abs(important_fraction * n_features - n_important()) > 1e-9) {
    throw std::invalid_argument("important_fraction * n_features must be an integer");
  }
  if (n_important() < kKeyFeatures) {
    throw std::invalid_argument("need at least three important features");
  }
  if (!(cluster_std >= 0.0) || !std::isfinite(cluster_std)) {
    throw std::invalid_argument("cluster_std must be finite and non-negative");
  }
}

Dataset gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::array<std::array<double, 3>, 8> vertices{};
  for (int v = 0; v < 8; ++v) {
    vertices[v] = {static_cast<double>((v >> 2) & 1), static_cast<double>((v >> 1) & 1),
                   static_cast<double>(v & 1)};
  }
  std::shuffle(vertices.begin(), vertices.end(), rng);

  const int n_red = cfg.n_redundant();
  std::vector<std::array<double, 3>> weights(n_red);
  for (auto& w : weights) {
    // Uniform on the 2-simplex via sorted uniform spacings.
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 > u2) std::swap(u1, u2);
    w = {u1, u2 - u1, 1.0 - u2};
  }

  Dataset d;
  d.n_classes = kSynthClasses;
  d.features = Matrix(cfg.n_samples, cfg.n_features);
  d.labels.resize(cfg.n_samples);
  std::uniform_int_distribution<int> pick_class(0, kSynthClasses - 1);
  std::normal_distribution<double> jitter(0.0, 1.0);
  for (int r = 0; r < cfg.n_samples; ++r) {
    const int y = pick_class(rng);
    d.labels[r] = y;
    auto row = d.features.row(r);
    for (int k = 0; k < kKeyFeatures; ++k) {
      row[k] = vertices[y][k] + cfg.cluster_std * jitter(rng);
    }
    for (int j = 0; j < n_red; ++j) {
      row[kKeyFeatures + j] = weights[j][0] * row[0] + weights[j][1] * row[1] +
                              weights[j][2] * row[2];
    }
    for (int j = kKeyFeatures + n_red; j < cfg.n_features; ++j) row[j] = uniform01(rng);
  }

  for (int k = 0; k < kKeyFeatures; ++k) d.feature_names.push_back("key" + std::to_string(k));
  for (int j = 0; j < n_red; ++j) d.feature_names.push_back("redundant" + std::to_string(j));
  for (int j = 0; j < cfg.n_noise(); ++j) d.feature_names.push_back("noise" + std::to_string(j));

  auto [normalized, record] = normalize_minmax(d);
  std::ostringstream centers;
  for (int c = 0; c < kSynthClasses; ++c) {
    centers << (c ? ";" : "") << vertices[c][0] << vertices[c][1] << vertices[c][2];
  }
  std::ostringstream mix;
  mix.precision(17);
  for (int j = 0; j < n_red; ++j) {
    mix << (j ? ";" : "") << weights[j][0] << "," << weights[j][1] << "," << weights[j][2];
  }
  normalized.metadata["generator"] = "synthetic-cube";
  normalized.metadata["cluster_vertices"] = centers.str();
  normalized.metadata["redundant_weights"] = mix.str();
  normalized.metadata["cluster_std"] = std::to_string(cfg.cluster_std);
  normalized.metadata["seed"] = std::to_string(cfg.seed);
  normalized.metadata["n_key"] = std::to_string(kKeyFeatures);
  normalized.metadata["n_redundant"] = std::to_string(n_red);
  return normalized;
}

}  // namespace shapleak
