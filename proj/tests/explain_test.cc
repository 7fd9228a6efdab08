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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "shapleak/explain.h"
#include "shapleak/models.h"
#include "shapleak/synth.h"
#include "test_util.h"

namespace shapleak {
namespace {

using testing::FnModel;
using testing::linear_probability_model;
using testing::random_matrix;
using testing::random_vector;
using testing::TempDir;

// Three-class softmax over products and squares; ignores the last feature.
FnModel interacting_model(std::size_t n) {
  return FnModel(n, 3, [n](std::span<const double> x, std::span<double> out) {
    out[0] = 2.0 * x[0] * x[1] - x[2];
    out[1] = std::sin(3.0 * x[1]) + x[0] * x[0];
    out[2] = 0.0;
    for (std::size_t i = 2; i + 1 < n; ++i) out[2] += (i % 2 ? 1.0 : -0.5) * x[i] * x[0];
    softmax_inplace(out);
  });
}

ReferenceSample reference_of(std::vector<double> values) {
  return ReferenceSample{std::move(values), -1};
}

// Average marginal contribution over every one of the n! orderings.
std::vector<double> permutation_enumeration_oracle(const Classifier& model,
                                                   std::span<const double> x,
                                                   std::span<const double> x0,
                                                   std::size_t cls) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> total(n, 0.0);
  double count = 0.0;
  do {
    std::vector<double> z(x0.begin(), x0.end());
    double before = model.predict(z)[cls];
    for (std::size_t i : order) {
      z[i] = x[i];
      const double after = model.predict(z)[cls];
      total[i] += after - before;
      before = after;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& t : total) t /= count;
  return total;
}

TEST(ComposeMasked, WorkedExample) {
  const std::vector<double> x0 = {3, 9, 2, 8};
  const std::vector<double> x = {6, 0, 3, 4};
  const std::vector<std::size_t> subset = {0, 1, 2};
  EXPECT_EQ(compose_masked(x, x0, subset), (std::vector<double>{6, 0, 3, 8}));
  EXPECT_EQ(compose_masked(x, x0, {}), x0);
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  EXPECT_EQ(compose_masked(x, x0, all), x);
  const std::vector<std::size_t> bad = {4};
  EXPECT_THROW(compose_masked(x, x0, bad), std::out_of_range);
}

TEST(ExactShapley, LinearModelExample) {
  const auto model = linear_probability_model({0.4, -0.2}, 0.3);
  const std::vector<double> x = {0.5, 0.5};
  const auto e = exact_shapley(model, x, reference_of({0.0, 0.0}), 1);
  EXPECT_NEAR(e.shapley[0], 0.2, 1e-12);
  EXPECT_NEAR(e.shapley[1], -0.1, 1e-12);
  EXPECT_EQ(e.target_class, 1u);
  EXPECT_EQ(e.method, ExplainMethod::exact());
}

TEST(ExactShapley, MatchesPermutationEnumeration) {
  const auto model = interacting_model(5);
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_vector(5, rng);
    const auto x0 = random_vector(5, rng);
    for (std::size_t cls = 0; cls < 3; ++cls) {
      const auto got = exact_shapley_values(model, x, x0, cls);
      const auto want = permutation_enumeration_oracle(model, x, x0, cls);
      for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
  }
}

TEST(ExactShapley, NullPlayerIsExactlyZero) {
  const auto model = interacting_model(6);
  Rng rng(2);
  const auto x = random_vector(6, rng);
  const auto x0 = random_vector(6, rng);
  EXPECT_EQ(exact_shapley_values(model, x, x0, 2)[5], 0.0);
  EXPECT_EQ(sampled_shapley_values(model, x, x0, 2, 17, 3)[5], 0.0);
}

TEST(ExactShapley, Symmetry) {
  const FnModel model(4, 2, [](std::span<const double> x, std::span<double> out) {
    out[1] = 1.0 / (1.0 + std::exp(-(x[0] * x[1] + x[0] + x[1] - x[2] * x[3])));
    out[0] = 1.0 - out[1];
  });
  const std::vector<double> x = {0.7, 0.7, 0.1, 0.9};
  const std::vector<double> x0 = {0.2, 0.2, 0.5, 0.5};
  const auto s = exact_shapley_values(model, x, x0, 1);
  EXPECT_NEAR(s[0], s[1], 1e-9);
}

TEST(ExactShapley, Linearity) {
  const auto f = interacting_model(5);
  const auto g = linear_probability_model({0.1, 0.05, -0.1, 0.2, 0.0}, 0.4);
  const double alpha = 0.7, beta = -1.3;
  const FnModel combo(5, 2, [&](std::span<const double> x, std::span<double> out) {
    const auto a = f.predict(x);
    const auto b = g.predict(x);
    out[0] = alpha * a[0] + beta * b[0];
    out[1] = alpha * a[1] + beta * b[1];
  });
  Rng rng(3);
  const auto x = random_vector(5, rng);
  const auto x0 = random_vector(5, rng);
  const auto sf = exact_shapley_values(f, x, x0, 1);
  const auto sg = exact_shapley_values(g, x, x0, 1);
  const auto sc = exact_shapley_values(combo, x, x0, 1);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(sc[i], alpha * sf[i] + beta * sg[i], 1e-9);
}

TEST(ExactShapley, EfficiencyForEveryModelKind) {
  SynthConfig sc;
  sc.n_features = 8;
  sc.n_samples = 300;
  const Dataset d = gen_synthetic(sc);
  MlpTrainOptions mo;
  mo.epochs = 10;
  ForestOptions fo;
  fo.n_trees = 10;
  GbdtOptions go;
  go.n_trees = 5;
  KsvmOptions ko;
  ko.iterations = 20;
  ko.max_support = 80;
  const std::vector<Model> models = {train_mlp(d, MlpArch::standard(8, 5), mo),
                                     train_rf(d, fo), train_gbdt(d, go), train_ksvm(d, ko)};
  Rng rng(4);
  for (const Model& m : models) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto x = random_vector(8, rng);
      const auto x0 = random_vector(8, rng);
      for (std::size_t cls = 0; cls < 5; ++cls) {
        const auto s = exact_shapley_values(m, x, x0, cls);
        const double sum = std::accumulate(s.begin(), s.end(), 0.0);
        EXPECT_NEAR(sum, m.predict(x)[cls] - m.predict(x0)[cls], 1e-9) << to_string(m.kind());
      }
    }
  }
}

TEST(ExactShapley, RefusesWideInputs) {
  const std::vector<double> w(21, 0.01);
  const auto model = linear_probability_model(w, 0.2);
  const std::vector<double> x(21, 0.5), x0(21, 0.0);
  EXPECT_THROW(exact_shapley_values(model, x, x0, 1), std::invalid_argument);
}

TEST(ExactShapley, ArgumentChecks) {
  const auto model = linear_probability_model({0.4, -0.2}, 0.3);
  const std::vector<double> x = {0.5, 0.5};
  EXPECT_THROW(exact_shapley(model, x, reference_of({0.0}), 1), std::invalid_argument);
  EXPECT_THROW(exact_shapley(model, x, reference_of({0.0, 0.0}), 2), std::invalid_argument);
}

TEST(PermutationsNeeded, Examples) {
  EXPECT_EQ(permutations_needed(0.1, 0.2), 38u);
  EXPECT_EQ(permutations_needed(0.1, 0.1), 150u);
  EXPECT_EQ(permutations_needed(0.1, 0.1 * 0.5, 0.5), 150u);
  // Direct evaluation of the formula for the r/5 setting.
  EXPECT_NEAR(std::log(2.0 / 0.1) / (2.0 * 0.04), 37.45, 0.01);
  EXPECT_THROW(permutations_needed(0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(permutations_needed(1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(permutations_needed(0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(permutations_needed(0.1, 0.1, 0.0), std::invalid_argument);
}

TEST(SampledShapley, ConvergesToExact) {
  const auto model = interacting_model(6);
  Rng rng(5);
  const auto x = random_vector(6, rng);
  const auto x0 = random_vector(6, rng);
  const auto exact = exact_shapley_values(model, x, x0, 0);
  const auto approx = sampled_shapley_values(model, x, x0, 0, 2000, 11);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(approx[i], exact[i], 0.02);
}

TEST(SampledShapley, DeterministicGivenSeed) {
  const auto model = interacting_model(6);
  const std::vector<double> x(6, 0.8), x0(6, 0.1);
  const auto ref = reference_of(x0);
  const auto a = sampled_shapley(model, x, ref, 1, 25, 9);
  const auto b = sampled_shapley(model, x, ref, 1, 25, 9);
  EXPECT_EQ(a.shapley, b.shapley);
  EXPECT_EQ(a.seed, 9u);
  EXPECT_NE(a.shapley, sampled_shapley(model, x, ref, 1, 25, 10).shapley);
  EXPECT_THROW(sampled_shapley(model, x, ref, 1, 0, 9), std::invalid_argument);
}

TEST(SampledShapley, SumsToPredictionGap) {
  const auto model = interacting_model(6);
  Rng rng(6);
  const auto x = random_vector(6, rng);
  const auto x0 = random_vector(6, rng);
  const auto s = sampled_shapley_values(model, x, x0, 2, 13, 1);
  EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0),
              model.predict(x)[2] - model.predict(x0)[2], 1e-12);
}

TEST(SampledShapley, ConcentrationRate) {
  const auto model = interacting_model(6);
  Rng rng(7);
  const auto x = random_vector(6, rng);
  const auto x0 = random_vector(6, rng);
  const auto exact = exact_shapley_values(model, x, x0, 0);
  for (double eps : {0.2, 0.1}) {
    const int nu = static_cast<int>(permutations_needed(0.1, eps));
    int misses = 0, cells = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto s = sampled_shapley_values(model, x, x0, 0, nu, seed);
      for (std::size_t i = 0; i < 6; ++i, ++cells) misses += std::abs(s[i] - exact[i]) >= eps;
    }
    EXPECT_LE(static_cast<double>(misses) / cells, 0.15) << "epsilon " << eps;
  }
}

TEST(NoiseVariance, ExactMethodHasNone) {
  const auto model = interacting_model(5);
  const std::vector<double> x(5, 0.6);
  const auto v = estimate_noise_var(model, x, reference_of(std::vector<double>(5, 0.0)), 0,
                                    ExplainMethod::exact(), 10, 1);
  for (double var : v) EXPECT_EQ(var, 0.0);
}

TEST(NoiseVariance, ShrinksWithMorePermutations) {
  const auto model = interacting_model(6);
  Rng rng(8);
  const auto x = random_vector(6, rng);
  const auto ref = reference_of(random_vector(6, rng));
  auto median_var = [&](int nu) {
    auto v = estimate_noise_var(model, x, ref, 0, ExplainMethod::sampled(nu), 30, 2);
    v.pop_back();  // ignored feature
    std::ranges::sort(v);
    return v[v.size() / 2];
  };
  EXPECT_LT(median_var(400), median_var(100));
}

TEST(NoiseVariance, TwoTrialsUseUnbiasedForm) {
  const auto model = interacting_model(4);
  const std::vector<double> x = {0.9, 0.2, 0.4, 0.6};
  const auto ref = reference_of({0.1, 0.8, 0.3, 0.0});
  const auto method = ExplainMethod::sampled(5);
  const auto v = estimate_noise_var(model, x, ref, 1, method, 2, 4);
  const auto a = explain(model, x, ref, 1, method, derive_seed(4, 0)).shapley;
  const auto b = explain(model, x, ref, 1, method, derive_seed(4, 1)).shapley;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(v[i], (a[i] - b[i]) * (a[i] - b[i]) / 2.0, 1e-15);
  }
  EXPECT_THROW(estimate_noise_var(model, x, ref, 1, method, 1, 4), std::invalid_argument);
}

TEST(MutualInformation, Examples) {
  EXPECT_EQ(mi_gaussian(2.0, 2.0).bits, 0.0);
  EXPECT_FALSE(mi_gaussian(2.0, 2.0).noise_dominated);
  EXPECT_DOUBLE_EQ(mi_gaussian(4.0, 1.0).bits, 1.0);
  const auto dominated = mi_gaussian(0.5, 1.0);
  EXPECT_EQ(dominated.bits, 0.0);
  EXPECT_TRUE(dominated.noise_dominated);
  EXPECT_THROW(mi_gaussian(1.0, 0.0), std::invalid_argument);
}

TEST(MutualInformation, ImportantFeatureCarriesMore) {
  SynthConfig sc;
  sc.n_samples = 2000;
  sc.seed = 3;
  const Dataset d = gen_synthetic(sc);
  MlpTrainOptions mo;
  mo.epochs = 30;
  const Model model = train_mlp(d, MlpArch::standard(d.cols(), 5), mo);
  const auto ref = reference_of(std::vector<double>(d.features.row(0).begin(),
                                                    d.features.row(0).end()));
  const auto method = ExplainMethod::sampled(20);
  const std::size_t key = 0, noise = d.cols() - 1;
  // Signal variance across samples, noise variance from repeated sampling.
  std::vector<double> s_key, s_noise;
  double eps_key = 0.0, eps_noise = 0.0;
  for (std::size_t r = 1; r <= 40; ++r) {
    const auto row = d.features.row(r);
    const auto e = explain(model, row, ref, 0, method, r);
    s_key.push_back(e.shapley[key]);
    s_noise.push_back(e.shapley[noise]);
    if (r <= 5) {
      const auto v = estimate_noise_var(model, row, ref, 0, method, 10, r);
      eps_key += v[key] / 5.0;
      eps_noise += v[noise] / 5.0;
    }
  }
  auto variance = [](const std::vector<double>& v) {
    const double mu = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double acc = 0.0;
    for (double a : v) acc += (a - mu) * (a - mu);
    return acc / (v.size() - 1);
  };
  const auto mi_key = mi_gaussian(variance(s_key), eps_key);
  const auto mi_noise = mi_gaussian(variance(s_noise), eps_noise);
  EXPECT_GT(mi_key.bits, mi_noise.bits);
}

// Independent chi-square statistic with equiprobable bins under the fitted
// normal, evaluated with Boost's quantile and tail functions.
double oracle_chi_square_p(const std::vector<double>& v, int bins) {
  const double n = static_cast<double>(v.size());
  const double mu = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : v) ss += (a - mu) * (a - mu);
  const boost::math::normal_distribution<double> fit(mu, std::sqrt(ss / (n - 1)));
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) edges.push_back(boost::math::quantile(fit, double(b) / bins));
  std::vector<double> counts(bins, 0.0);
  for (double a : v) counts[std::upper_bound(edges.begin(), edges.end(), a) - edges.begin()] += 1;
  double stat = 0.0;
  const double expected = n / bins;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return boost::math::cdf(boost::math::complement(
      boost::math::chi_squared_distribution<double>(bins - 3), stat));
}

TEST(GaussianFit, CalibratedOnGaussianDraws) {
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(1.0, 2.0);
    std::vector<double> v(10000);
    for (double& a : v) a = g(rng);
    const auto fit = gaussian_fit_test(v, 10);
    EXPECT_EQ(fit.degrees_of_freedom, 7);
    EXPECT_NEAR(fit.p_value, oracle_chi_square_p(v, 10), 1e-9);
    accepted += fit.p_value > 0.05;
  }
  EXPECT_GE(accepted, 45);
}

TEST(GaussianFit, RejectsUniformDraws) {
  Rng rng(1);
  std::vector<double> v(10000);
  for (double& a : v) a = uniform01(rng);
  const auto fit = gaussian_fit_test(v, 10);
  EXPECT_LT(fit.p_value, 0.01);
  EXPECT_NEAR(fit.p_value, oracle_chi_square_p(v, 10), 1e-9);
}

TEST(GaussianFit, TooFewSamples) {
  const std::vector<double> v(49, 1.0);
  EXPECT_THROW(gaussian_fit_test(v, 10), std::invalid_argument);
}

TEST(ExplanationFile, RoundTrip) {
  TempDir dir;
  const auto model = interacting_model(4);
  const std::vector<double> x = {0.3, 0.1, 0.9, 0.5};
  const auto ref = ReferenceSample{{0.0, 0.5, 0.5, 1.0}, 17};
  const std::vector<Explanation> list = {exact_shapley(model, x, ref, 0),
                                         sampled_shapley(model, x, ref, 2, 7, 123)};
  save_explanations(list, dir / "e.json");
  const auto back = load_explanations(dir / "e.json");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].shapley, list[k].shapley);
    EXPECT_EQ(back[k].method, list[k].method);
    EXPECT_EQ(back[k].target_class, list[k].target_class);
    EXPECT_EQ(back[k].reference_id, list[k].reference_id);
    EXPECT_EQ(back[k].seed, list[k].seed);
  }
}

}  // namespace
}  // namespace shapleak
