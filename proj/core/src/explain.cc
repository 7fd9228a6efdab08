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

#include "shapleak/explain.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "json_util.h"
#include "shapleak/stats.h"

namespace shapleak {
namespace {

void check_query(const Classifier& model, std::span<const double> x,
                 std::span<const double> x0, std::size_t target_class) {
  if (x.size() != model.n_inputs() || x0.size() != model.n_inputs()) {
    throw std::invalid_argument("explain: sample and reference must have n entries");
  }
  if (target_class >= model.n_classes()) {
    throw std::invalid_argument("explain: target class out of range");
  }
}

}  // namespace

std::string ReferenceSample::id() const {
  if (source >= 0) return "train:" + std::to_string(source);
  std::string text;
  for (double v : values) text += std::to_string(v) + ",";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return std::string("custom:") + buf;
}

std::vector<double> compose_masked(std::span<const double> x, std::span<const double> x0,
                                   std::span<const std::size_t> subset) {
  if (x.size() != x0.size()) throw std::invalid_argument("compose_masked: length mismatch");
  std::vector<double> out(x0.begin(), x0.end());
  for (std::size_t j : subset) {
    if (j >= x.size()) throw std::out_of_range("compose_masked: feature index out of range");
    out[j] = x[j];
  }
  return out;
}

std::vector<double> exact_shapley_values(const Classifier& model, std::span<const double> x,
                                         std::span<const double> x0,
                                         std::size_t target_class) {
  check_query(model, x, x0, target_class);
  const std::size_t n = x.size();
  if (n > kMaxExactFeatures) {
    throw std::invalid_argument("exact Shapley refused for n = " + std::to_string(n) +
                                " > " + std::to_string(kMaxExactFeatures) +
                                "; use the sampled method");
  }
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> value(subsets);
  std::vector<double> z(n);
  std::vector<double> out(model.n_classes());
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    for (std::size_t j = 0; j < n; ++j) z[j] = (mask >> j) & 1 ? x[j] : x0[j];
    model.predict_into(z, out);
    value[mask] = out[target_class];
  }
  // weight[s] = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }
  std::vector<double> shapley(n, 0.0);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    const double w = weight[std::min<std::size_t>(std::popcount(mask), n - 1)];
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1) continue;
      shapley[i] += w * (value[mask | (std::size_t{1} << i)] - value[mask]);
    }
  }
  return shapley;
}

Explanation exact_shapley(const Classifier& model, std::span<const double> x,
                          const ReferenceSample& reference, std::size_t target_class) {
  Explanation e;
  e.shapley = exact_shapley_values(model, x, reference.values, target_class);
  e.target_class = target_class;
  e.method = ExplainMethod::exact();
  e.reference_id = reference.id();
  return e;
}

std::uint64_t permutations_needed(double delta, double epsilon, double marginal_range) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (!(marginal_range > 0.0) || !std::isfinite(marginal_range)) {
    throw std::invalid_argument("marginal range must be positive");
  }
  const double raw = std::log(2.0 / delta) * marginal_range * marginal_range /
                     (2.0 * epsilon * epsilon);
  return static_cast<std::uint64_t>(std::ceil(raw));
}

std::vector<double> sampled_shapley_values(const Classifier& model, std::span<const double> x,
                                           std::span<const double> x0,
                                           std::size_t target_class, int nu,
                                           std::uint64_t seed) {
  check_query(model, x, x0, target_class);
  if (nu < 1) throw std::invalid_argument("sampled Shapley needs nu >= 1");
  const std::size_t n = x.size();
  std::vector<double> out(model.n_classes());
  model.predict_into(x0, out);
  const double at_reference = out[target_class];
  model.predict_into(x, out);
  const double at_sample = out[target_class];

  std::vector<double> total(n, 0.0);
  std::vector<std::size_t> perm(n);
  std::vector<double> z(n);
  for (int k = 0; k < nu; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::ranges::copy(x0, z.begin());
    double prev = at_reference;
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t i = perm[p];
      z[i] = x[i];
      double cur;
      if (p + 1 == n) {
        cur = at_sample;
      } else {
        model.predict_into(z, out);
        cur = out[target_class];
      }
      total[i] += cur - prev;
      prev = cur;
    }
  }
  for (double& v : total) v /= static_cast<double>(nu);
  return total;
}

Explanation sampled_shapley(const Classifier& model, std::span<const double> x,
                            const ReferenceSample& reference, std::size_t target_class,
                            int nu, std::uint64_t seed) {
  Explanation e;
  e.shapley = sampled_shapley_values(model, x, reference.values, target_class, nu, seed);
  e.target_class = target_class;
  e.method = ExplainMethod::sampled(nu);
  e.reference_id = reference.id();
  e.seed = seed;
  return e;
}

Explanation explain(const Classifier& model, std::span<const double> x,
                    const ReferenceSample& reference, std::size_t target_class,
                    const ExplainMethod& method, std::uint64_t seed) {
  if (method.type == ExplainMethodType::kExact) {
    return exact_shapley(model, x, reference, target_class);
  }
  return sampled_shapley(model, x, reference, target_class, method.nu, seed);
}

std::vector<double> estimate_noise_var(const Classifier& model, std::span<const double> x,
                                       const ReferenceSample& reference,
                                       std::size_t target_class, const ExplainMethod& method,
                                       int trials, std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("noise variance needs at least 2 trials");
  const std::size_t n = x.size();
  Matrix runs(static_cast<std::size_t>(trials), n);
  for (int t = 0; t < trials; ++t) {
    const auto e = explain(model, x, reference, target_class, method,
                           derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::ranges::copy(e.shapley, runs.row(t).begin());
  }
  std::vector<double> var(n);
  for (std::size_t i = 0; i < n; ++i) var[i] = sample_variance(runs.column(i));
  return var;
}

MutualInformation mi_gaussian(double var_s, double var_eps) {
  if (!(var_eps > 0.0) || !(var_s >= 0.0)) {
    throw std::invalid_argument("mi_gaussian: variances must be positive");
  }
  if (var_s < var_eps) return {0.0, true};
  return {0.5 * std::log2(var_s / var_eps), false};
}

GaussianFitTest gaussian_fit_test(std::span<const double> values, int n_bins) {
  if (n_bins < 4) throw std::invalid_argument("gaussian_fit_test needs at least 4 bins");
  if (values.size() < static_cast<std::size_t>(5 * n_bins)) {
    throw std::invalid_argument("gaussian_fit_test: too few samples for " +
                                std::to_string(n_bins) + " bins");
  }
  const double mu = mean(values);
  const double sd = std::sqrt(sample_variance(values));
  const boost::math::normal_distribution<double> standard(0.0, 1.0);
  std::vector<double> edges(n_bins - 1);
  for (int j = 1; j < n_bins; ++j) {
    edges[j - 1] = mu + sd * boost::math::quantile(standard, static_cast<double>(j) / n_bins);
  }
  std::vector<double> observed(n_bins, 0.0);
  for (double v : values) {
    observed[std::ranges::upper_bound(edges, v) - edges.begin()] += 1.0;
  }
  const double expected = static_cast<double>(values.size()) / n_bins;
  GaussianFitTest result;
  for (double o : observed) result.statistic += (o - expected) * (o - expected) / expected;
  result.degrees_of_freedom = n_bins - 3;
  const boost::math::chi_squared_distribution<double> chi2(result.degrees_of_freedom);
  result.p_value = boost::math::cdf(boost::math::complement(chi2, result.statistic));
  return result;
}

nlohmann::json explanation_to_json(const Explanation& e) {
  nlohmann::json method = {{"type", e.method.type == ExplainMethodType::kExact ? "exact"
                                                                                : "sampled"}};
  if (e.method.type == ExplainMethodType::kSampled) method["nu"] = e.method.nu;
  nlohmann::json j = {{"shapley", e.shapley},
                      {"target_class", e.target_class},
                      {"method", method},
                      {"reference_id", e.reference_id}};
  if (e.method.type == ExplainMethodType::kSampled) j["seed"] = e.seed;
  return j;
}

Explanation explanation_from_json(const nlohmann::json& j) {
  using internal::field;
  Explanation e;
  e.shapley = field<std::vector<double>>(j, "shapley");
  e.target_class = field<std::size_t>(j, "target_class");
  e.reference_id = field<std::string>(j, "reference_id");
  const auto& mj = j.at("method");
  const auto type = field<std::string>(mj, "type");
  if (type == "exact") {
    e.method = ExplainMethod::exact();
  } else if (type == "sampled") {
    e.method = ExplainMethod::sampled(field<int>(mj, "nu"));
    e.seed = field<std::uint64_t>(j, "seed");
  } else {
    throw FormatError("unknown explanation method '" + type + "'");
  }
  return e;
}

void save_explanations(std::span<const Explanation> explanations,
                       const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format"] = "shapleak-explanations";
  doc["version"] = 1;
  doc["records"] = nlohmann::json::array();
  for (const auto& e : explanations) doc["records"].push_back(explanation_to_json(e));
  internal::write_json_file(doc, path);
}

std::vector<Explanation> load_explanations(const std::filesystem::path& path) {
  const auto doc = internal::read_json_file(path);
  internal::expect_format(doc, "shapleak-explanations", 1);
  std::vector<Explanation> out;
  for (const auto& rj : doc.at("records")) out.push_back(explanation_from_json(rj));
  return out;
}

}  // namespace shapleak
