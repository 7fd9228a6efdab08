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

#include "shapleak/attack2.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json_util.h"

namespace shapleak {

void Attack2Config::validate() const {
  if (min_candidates < 1) throw std::invalid_argument("min_candidates must be at least 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
  if (xi && !(*xi > 0.0)) throw std::invalid_argument("xi must be positive");
  if (!(xi_fraction > 0.0)) throw std::invalid_argument("xi_fraction must be positive");
}

std::size_t Reconstruction::recovered() const {
  return static_cast<std::size_t>(
      std::ranges::count_if(values, [](const auto& v) { return v.has_value(); }));
}

Matrix gen_random_queries(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("random queries need m >= 1 and n >= 1");
  Rng rng(seed);
  Matrix x(m, n);
  for (double& v : x.data()) v = uniform01(rng);
  return x;
}

double shap_range(const Matrix& shapley) {
  if (shapley.empty() || shapley.cols() == 0) {
    throw std::invalid_argument("shap_range of an empty explanation set");
  }
  const auto [lo, hi] = std::ranges::minmax(shapley.data());
  return hi - lo;
}

std::vector<double> shap_range_per_feature(const Matrix& shapley) {
  if (shapley.empty() || shapley.cols() == 0) {
    throw std::invalid_argument("shap_range of an empty explanation set");
  }
  std::vector<double> r(shapley.cols());
  for (std::size_t c = 0; c < shapley.cols(); ++c) {
    const auto col = shapley.column(c);
    const auto [lo, hi] = std::ranges::minmax(col);
    r[c] = hi - lo;
  }
  return r;
}

std::vector<double> resolve_xi(const Attack2Config& cfg, const Matrix& s_rand) {
  cfg.validate();
  const std::size_t n = s_rand.cols();
  if (cfg.xi) return std::vector<double>(n, *cfg.xi);
  std::vector<double> ranges = cfg.per_feature_range ? shap_range_per_feature(s_rand)
                                                     : std::vector<double>(n, shap_range(s_rand));
  for (double& r : ranges) r = r > 0.0 ? cfg.xi_fraction * r : kXiFloor;
  return ranges;
}

Reconstruction run_attack2(std::span<const double> s_target, const Matrix& x_rand,
                           const Matrix& s_rand, const Attack2Config& cfg,
                           std::span<const double> xi) {
  cfg.validate();
  const std::size_t m = x_rand.rows();
  const std::size_t n = s_target.size();
  if (s_rand.rows() != m || x_rand.cols() != n || s_rand.cols() != n || xi.size() != n) {
    throw std::invalid_argument("attack 2 inputs have inconsistent shapes");
  }
  if (m < cfg.min_candidates) {
    throw std::invalid_argument("random query count " + std::to_string(m) +
                                " is below min_candidates " +
                                std::to_string(cfg.min_candidates));
  }
  Reconstruction rec;
  rec.values.resize(n);
  rec.ranges.resize(n);
  rec.counts.resize(n);
  std::vector<std::size_t> order(m);
  std::vector<double> dist(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) dist[j] = std::abs(s_target[i] - s_rand(j, i));
    std::iota(order.begin(), order.end(), 0);
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    double sum = 0.0;
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    for (std::size_t j : order) {
      if (count >= cfg.min_candidates && !(dist[j] < xi[i])) break;
      const double v = x_rand(j, i);
      lo = count == 0 ? v : std::min(lo, v);
      hi = count == 0 ? v : std::max(hi, v);
      sum += v;
      ++count;
    }
    rec.counts[i] = count;
    rec.ranges[i] = {lo, hi};
    if (hi - lo <= cfg.tau) rec.values[i] = std::clamp(sum / count, lo, hi);
  }
  return rec;
}

Reconstruction run_attack2(std::span<const double> s_target, const Matrix& x_rand,
                           const Matrix& s_rand, const Attack2Config& cfg) {
  return run_attack2(s_target, x_rand, s_rand, cfg, resolve_xi(cfg, s_rand));
}

BoundReport error_bound(double u, double w, std::size_t k, double a, double b) {
  if (!(u > 1.0) || !(w > 0.0) || k < 1 || !(b > a)) {
    throw std::invalid_argument("error bound needs u > 1, w > 0, k >= 1 and b > a");
  }
  BoundReport r{u, w, k, a, b, 0.0, 0.0};
  const double width = b - a;
  r.error_radius = u * width / 2.0 + w;
  const double u2 = u * u;
  const double hoeffding =
      2.0 * std::exp(std::log(u2 - 1.0) - 2.0 * w * w * static_cast<double>(k) / (width * width));
  r.confidence = std::clamp(1.0 - 1.0 / u2 - hoeffding / u2, 0.0, 1.0);
  return r;
}

double success_rate(std::span<const Reconstruction> reconstructions) {
  if (reconstructions.empty()) throw std::invalid_argument("success rate of an empty set");
  std::size_t cells = 0, recovered = 0;
  for (const auto& r : reconstructions) {
    cells += r.values.size();
    recovered += r.recovered();
  }
  if (cells == 0) throw std::invalid_argument("success rate over zero cells");
  return static_cast<double>(recovered) / static_cast<double>(cells);
}

nlohmann::json reconstruction_to_json(const Reconstruction& r) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : r.values) values.push_back(v ? nlohmann::json(*v) : nlohmann::json());
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& [lo, hi] : r.ranges) ranges.push_back({lo, hi});
  return {{"values", values}, {"ranges", ranges}, {"counts", r.counts}};
}

Reconstruction reconstruction_from_json(const nlohmann::json& j) {
  Reconstruction r;
  try {
    for (const auto& v : j.at("values")) {
      r.values.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    }
    for (const auto& range : j.at("ranges")) {
      r.ranges.emplace_back(range.at(0).get<double>(), range.at(1).get<double>());
    }
    r.counts = j.at("counts").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("reconstruction: ") + e.what());
  }
  if (r.ranges.size() != r.values.size() || r.counts.size() != r.values.size()) {
    throw FormatError("reconstruction arrays differ in length");
  }
  return r;
}

void save_reconstructions(std::span<const Reconstruction> reconstructions,
                          const std::filesystem::path& path) {
  nlohmann::json doc = {{"format", "shapleak-reconstructions"}, {"version", 1}};
  doc["reconstructions"] = nlohmann::json::array();
  for (const auto& r : reconstructions) doc["reconstructions"].push_back(reconstruction_to_json(r));
  internal::write_json_file(doc, path);
}

std::vector<Reconstruction> load_reconstructions(const std::filesystem::path& path) {
  const auto doc = internal::read_json_file(path);
  internal::expect_format(doc, "shapleak-reconstructions", 1);
  std::vector<Reconstruction> out;
  for (const auto& j : doc.at("reconstructions")) out.push_back(reconstruction_from_json(j));
  return out;
}

}  // namespace shapleak
