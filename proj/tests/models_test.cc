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
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "shapleak/models.h"
#include "shapleak/synth.h"
#include "test_util.h"

namespace shapleak {
namespace {

using testing::random_matrix;
using testing::TempDir;

Dataset make_dataset(Matrix x, std::vector<int> labels, int n_classes) {
  Dataset d;
  d.features = std::move(x);
  d.labels = std::move(labels);
  d.n_classes = n_classes;
  for (std::size_t c = 0; c < d.cols(); ++c) d.feature_names.push_back("f" + std::to_string(c));
  return d;
}

// Label 1 when x0 + x1 > 1, with a margin band removed.
Dataset separable(std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x;
  std::vector<int> y;
  while (y.size() < m) {
    const double a = uniform01(rng), b = uniform01(rng);
    if (std::abs(a + b - 1.0) < 0.1) continue;
    const double row[] = {a, b};
    x.append_row(row);
    y.push_back(a + b > 1.0 ? 1 : 0);
  }
  return make_dataset(std::move(x), std::move(y), 2);
}

Dataset xor_data(std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.08);
  Matrix x;
  std::vector<int> y;
  for (std::size_t i = 0; i < m; ++i) {
    const int a = static_cast<int>(i % 2), b = static_cast<int>((i / 2) % 2);
    const double row[] = {std::clamp(0.2 + 0.6 * a + g(rng), 0.0, 1.0),
                          std::clamp(0.2 + 0.6 * b + g(rng), 0.0, 1.0)};
    x.append_row(row);
    y.push_back(a ^ b);
  }
  return make_dataset(std::move(x), std::move(y), 2);
}

std::string model_bytes(const Model& m) { return model_to_json(m).dump(); }

void expect_probability_vectors(const Classifier& model, std::size_t samples) {
  const Matrix x = random_matrix(samples, model.n_inputs(), 99);
  for (std::size_t r = 0; r < samples; ++r) {
    const auto p = model.predict(x.row(r));
    double total = 0.0;
    for (double v : p) {
      ASSERT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

Dataset small_synthetic() {
  SynthConfig c;
  c.n_samples = 300;
  c.seed = 5;
  return gen_synthetic(c);
}

MlpTrainOptions quick_mlp(std::uint64_t seed = 0) {
  MlpTrainOptions o;
  o.epochs = 20;
  o.seed = seed;
  return o;
}

TEST(ModelKind, Names) {
  for (ModelKind k : {ModelKind::kMlp, ModelKind::kRandomForest, ModelKind::kGbdt,
                      ModelKind::kKernelSvm}) {
    EXPECT_EQ(model_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(model_kind_from_string("svm2"), std::invalid_argument);
}

TEST(Mlp, SeparableTrainingAccuracy) {
  const Dataset train = separable(400, 1);
  MlpTrainOptions o;
  o.epochs = 300;
  o.seed = 3;
  const Model m = train_mlp(train, MlpArch::standard(2, 2), o);
  EXPECT_GE(accuracy(m, train), 0.95);
  EXPECT_GE(accuracy(m, separable(400, 2)), 0.95);
}

TEST(Mlp, ZeroEpochsIsNearUniform) {
  const Dataset d = small_synthetic();
  MlpTrainOptions o;
  o.epochs = 0;
  const Model m = train_mlp(d, MlpArch::standard(d.cols(), 5), o);
  const Matrix x = random_matrix(50, d.cols(), 4);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (double p : m.predict(x.row(r))) EXPECT_NEAR(p, 0.2, 0.1);
  }
}

TEST(Mlp, DropoutRates) {
  const Dataset d = small_synthetic();
  for (double rate : {0.2, 0.5, 0.8}) {
    const Model m = train_mlp(d, MlpArch::standard(d.cols(), 5, rate), quick_mlp());
    EXPECT_EQ(m.meta().dropout_rate, rate);
  }
  EXPECT_THROW(train_mlp(d, MlpArch::standard(d.cols(), 5, 1.0), quick_mlp()),
               std::invalid_argument);
}

TEST(Mlp, InferenceIgnoresDropout) {
  const Dataset d = small_synthetic();
  const Model trained = train_mlp(d, MlpArch::standard(d.cols(), 5, 0.8), quick_mlp());
  TrainMeta meta = trained.meta();
  meta.dropout_rate = 0.0;
  const Model same_weights(trained.params(), trained.n_inputs(), trained.n_classes(), meta);
  const Matrix x = random_matrix(20, d.cols(), 8);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    EXPECT_EQ(trained.predict(x.row(r)), same_weights.predict(x.row(r)));
    EXPECT_EQ(trained.predict(x.row(r)), trained.predict(x.row(r)));
  }
}

TEST(Mlp, WidthMismatch) {
  const Dataset d = small_synthetic();
  MlpArch arch = MlpArch::standard(d.cols(), 4);
  EXPECT_THROW(train_mlp(d, arch, quick_mlp()), std::invalid_argument);
  EXPECT_EQ(MlpArch::standard(12, 5).widths, (std::vector<std::size_t>{12, 24, 24, 5}));
}

// Exhaustive search over every split between consecutive distinct values of a
// single feature, scored by misclassification count with majority leaves.
double best_stump_threshold_errors(const Dataset& d) {
  std::vector<std::size_t> order(d.rows());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](auto a, auto b) { return d.features(a, 0) < d.features(b, 0); });
  std::size_t best = d.rows();
  for (std::size_t cut = 1; cut < order.size(); ++cut) {
    int left1 = 0, right1 = 0;
    for (std::size_t i = 0; i < cut; ++i) left1 += d.labels[order[i]];
    for (std::size_t i = cut; i < order.size(); ++i) right1 += d.labels[order[i]];
    const std::size_t nl = cut, nr = order.size() - cut;
    const std::size_t errors = std::min<std::size_t>(left1, nl - left1) +
                               std::min<std::size_t>(right1, nr - right1);
    best = std::min(best, errors);
  }
  return static_cast<double>(best);
}

TEST(RandomForest, SingleStumpRecoversThreshold) {
  Rng rng(12);
  Matrix x(200, 1);
  std::vector<int> y(200);
  for (std::size_t r = 0; r < 200; ++r) {
    x(r, 0) = uniform01(rng);
    y[r] = x(r, 0) > 0.37 ? 1 : 0;
  }
  const Dataset d = make_dataset(x, y, 2);
  ForestOptions o;
  o.n_trees = 1;
  o.max_depth = 1;
  o.bootstrap = false;
  const Model m = train_rf(d, o);
  const auto& tree = std::get<ForestParams>(m.params()).trees.at(0);
  ASSERT_FALSE(tree.nodes().front().is_leaf());
  double below = 0.0, above = 1.0;
  for (std::size_t r = 0; r < 200; ++r) {
    if (y[r] == 0) below = std::max(below, x(r, 0));
    if (y[r] == 1) above = std::min(above, x(r, 0));
  }
  EXPECT_GE(tree.nodes().front().threshold, below);
  EXPECT_LT(tree.nodes().front().threshold, above);
  EXPECT_EQ(best_stump_threshold_errors(d), 0.0);
  EXPECT_EQ(accuracy(m, d), 1.0);
}

TEST(RandomForest, NoisyStumpMatchesExhaustiveSearch) {
  Rng rng(13);
  Matrix x(150, 1);
  std::vector<int> y(150);
  for (std::size_t r = 0; r < 150; ++r) {
    x(r, 0) = uniform01(rng);
    y[r] = (x(r, 0) > 0.6) != (uniform01(rng) < 0.15) ? 1 : 0;
  }
  const Dataset d = make_dataset(x, y, 2);
  ForestOptions o;
  o.n_trees = 1;
  o.max_depth = 1;
  o.bootstrap = false;
  const Model m = train_rf(d, o);
  const double errors = (1.0 - accuracy(m, d)) * 150.0;
  // Gini and misclassification optima can differ, but never by much here.
  EXPECT_LE(errors, best_stump_threshold_errors(d) + 3.0);
}

TEST(RandomForest, ConstantLabels) {
  Dataset d = small_synthetic();
  std::ranges::fill(d.labels, 2);
  ForestOptions o;
  o.n_trees = 5;
  const Model m = train_rf(d, o);
  EXPECT_TRUE(m.meta().degenerate);
  const Matrix x = random_matrix(10, d.cols(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    EXPECT_EQ(m.predict(x.row(r))[2], 1.0);
  }
}

TEST(RandomForest, VotesSumToOne) {
  const Dataset d = small_synthetic();
  ForestOptions o;
  o.n_trees = 7;
  expect_probability_vectors(train_rf(d, o), 100);
}

// First boosting round for two classes, computed independently: residuals
// against the class prior, the least-squares stump on one feature, and the
// Newton leaf value (1/2) sum(r) / sum(|r| (1 - |r|)).
TEST(Gbdt, FirstStepMatchesClosedForm) {
  Rng rng(31);
  const std::size_t m = 120;
  Matrix x(m, 1);
  std::vector<int> y(m);
  for (std::size_t r = 0; r < m; ++r) {
    x(r, 0) = (static_cast<double>(r) + 0.5) / m;
    y[r] = (x(r, 0) > 0.45) != (uniform01(rng) < 0.1) ? 1 : 0;
  }
  const Dataset d = make_dataset(x, y, 2);
  GbdtOptions o;
  o.n_trees = 1;
  o.max_depth = 1;
  o.shrinkage = 0.3;
  const Model model = train_gbdt(d, o);

  const double p1 = static_cast<double>(std::count(y.begin(), y.end(), 1)) / m;
  const double prior[] = {1.0 - p1, p1};
  std::vector<double> predicted(m * 2);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> res(m);
    for (std::size_t r = 0; r < m; ++r) res[r] = (y[r] == k ? 1.0 : 0.0) - prior[k];
    std::size_t best_cut = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t cut = 1; cut < m; ++cut) {
      double sl = 0, sr = 0;
      for (std::size_t r = 0; r < cut; ++r) sl += res[r];
      for (std::size_t r = cut; r < m; ++r) sr += res[r];
      double sse = 0;
      for (std::size_t r = 0; r < m; ++r) {
        const double mu = r < cut ? sl / cut : sr / (m - cut);
        sse += (res[r] - mu) * (res[r] - mu);
      }
      if (sse < best_sse - 1e-12) {
        best_sse = sse;
        best_cut = cut;
      }
    }
    auto newton = [&](std::size_t lo, std::size_t hi) {
      double num = 0, den = 0;
      for (std::size_t r = lo; r < hi; ++r) {
        num += res[r];
        den += std::abs(res[r]) * (1 - std::abs(res[r]));
      }
      return 0.5 * num / den;
    };
    const double left = newton(0, best_cut), right = newton(best_cut, m);
    for (std::size_t r = 0; r < m; ++r) {
      predicted[r * 2 + k] = std::log(prior[k]) + o.shrinkage * (r < best_cut ? left : right);
    }
  }
  for (std::size_t r = 0; r < m; ++r) {
    const double z0 = predicted[r * 2], z1 = predicted[r * 2 + 1];
    const double q1 = 1.0 / (1.0 + std::exp(z0 - z1));
    EXPECT_NEAR(model.predict(x.row(r))[1], q1, 1e-12) << "row " << r;
  }
}

TEST(Gbdt, ZeroShrinkageGivesPrior) {
  const Dataset d = small_synthetic();
  GbdtOptions o;
  o.n_trees = 5;
  o.shrinkage = 0.0;
  const Model m = train_gbdt(d, o);
  std::vector<double> prior(5);
  for (int y : d.labels) prior[y] += 1.0 / d.rows();
  const Matrix x = random_matrix(10, d.cols(), 2);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto p = m.predict(x.row(r));
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(p[k], prior[k], 1e-12);
  }
}

TEST(Gbdt, TrainingLossIsMonotoneInTrees) {
  const Dataset d = small_synthetic();
  double previous = std::numeric_limits<double>::infinity();
  for (int trees = 0; trees <= 12; trees += 2) {
    GbdtOptions o;
    o.n_trees = trees;
    o.seed = 4;
    const double loss = log_loss(train_gbdt(d, o), d);
    EXPECT_LE(loss, previous + 1e-9) << trees << " trees";
    previous = loss;
  }
}

TEST(Ksvm, XorBeatsLinear) {
  const Dataset train = xor_data(200, 1);
  const Dataset test = xor_data(200, 2);
  KsvmOptions o;
  o.gamma = 10.0;
  const Model kernel = train_ksvm(train, o);
  EXPECT_GE(accuracy(kernel, test), 0.9);

  MlpArch linear;
  linear.widths = {2, 2};
  MlpTrainOptions lo;
  lo.epochs = 200;
  const Model line = train_mlp(train, linear, lo);
  EXPECT_LE(accuracy(line, test), 0.6);
}

TEST(Ksvm, ZeroGammaGivesPrior) {
  const Dataset d = small_synthetic();
  KsvmOptions o;
  o.gamma = 0.0;
  o.iterations = 50;
  const Model m = train_ksvm(d, o);
  std::vector<double> prior(5);
  for (int y : d.labels) prior[y] += 1.0 / d.rows();
  const Matrix x = random_matrix(10, d.cols(), 2);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto p = m.predict(x.row(r));
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(p[k], prior[k], 1e-6);
  }
}

class AllKinds : public ::testing::TestWithParam<ModelKind> {
 protected:
  static Model train(ModelKind kind, const Dataset& d, std::uint64_t seed) {
    switch (kind) {
      case ModelKind::kMlp:
        return train_mlp(d, MlpArch::standard(d.cols(), d.n_classes), quick_mlp(seed));
      case ModelKind::kRandomForest: {
        ForestOptions o;
        o.n_trees = 10;
        o.seed = seed;
        return train_rf(d, o);
      }
      case ModelKind::kGbdt: {
        GbdtOptions o;
        o.n_trees = 5;
        o.seed = seed;
        return train_gbdt(d, o);
      }
      case ModelKind::kKernelSvm: {
        KsvmOptions o;
        o.iterations = 30;
        o.max_support = 100;
        o.seed = seed;
        return train_ksvm(d, o);
      }
    }
    throw std::logic_error("unreachable");
  }
};

TEST_P(AllKinds, ProbabilityVectors) {
  expect_probability_vectors(train(GetParam(), small_synthetic(), 1), 200);
}

TEST_P(AllKinds, DeterministicBytes) {
  const Dataset d = small_synthetic();
  EXPECT_EQ(model_bytes(train(GetParam(), d, 7)), model_bytes(train(GetParam(), d, 7)));
}

TEST_P(AllKinds, SaveLoadPredictsBitIdentically) {
  TempDir dir;
  const Dataset d = small_synthetic();
  const Model m = train(GetParam(), d, 2);
  save_model(m, dir / "m.json");
  const Model back = load_model(dir / "m.json", GetParam());
  EXPECT_EQ(back.kind(), GetParam());
  const Matrix x = random_matrix(100, d.cols(), 6);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    EXPECT_EQ(m.predict(x.row(r)), back.predict(x.row(r)));
  }
}

TEST_P(AllKinds, DimensionMismatch) {
  const Model m = train(GetParam(), small_synthetic(), 0);
  const std::vector<double> x(m.n_inputs() + 1, 0.5);
  EXPECT_THROW(m.predict(x), std::invalid_argument);
}

INSTANTIATE_TEST_SUITE_P(Models, AllKinds,
                         ::testing::Values(ModelKind::kMlp, ModelKind::kRandomForest,
                                           ModelKind::kGbdt, ModelKind::kKernelSvm),
                         [](const auto& info) { return to_string(info.param); });

TEST(ModelFile, TruncatedFile) {
  TempDir dir;
  const Dataset d = small_synthetic();
  ForestOptions o;
  o.n_trees = 2;
  save_model(train_rf(d, o), dir / "m.json");
  std::ifstream in(dir / "m.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::ofstream(dir / "cut.json") << text.substr(0, text.size() / 2);
  EXPECT_THROW(load_model(dir / "cut.json"), FormatError);
}

TEST(ModelFile, CrossKindLoad) {
  TempDir dir;
  ForestOptions o;
  o.n_trees = 2;
  save_model(train_rf(small_synthetic(), o), dir / "rf.json");
  try {
    load_model(dir / "rf.json", ModelKind::kMlp);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("kind mismatch"), std::string::npos);
  }
}

TEST(ModelFile, VersionMismatch) {
  ForestOptions o;
  o.n_trees = 1;
  auto doc = model_to_json(train_rf(small_synthetic(), o));
  doc["version"] = 99;
  EXPECT_THROW(model_from_json(doc), FormatError);
}

}  // namespace
}  // namespace shapleak
