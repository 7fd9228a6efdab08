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

#ifndef SHAPLEAK_MODELS_H_
#define SHAPLEAK_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapleak/common.h"
#include "shapleak/dataset.h"
#include "shapleak/network.h"
#include "shapleak/tree.h"

namespace shapleak {

// Black-box probabilistic classifier: [0,1]^n -> probability vector of length c.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t n_inputs() const = 0;
  virtual std::size_t n_classes() const = 0;
  // `out` has n_classes() entries. Implementations must be reentrant.
  virtual void predict_into(std::span<const double> x, std::span<double> out) const = 0;

  // Checked convenience wrapper.
  std::vector<double> predict(std::span<const double> x) const;
};

Matrix predict_batch(const Classifier& model, const Matrix& x);
double accuracy(const Classifier& model, const Dataset& d);
double log_loss(const Classifier& model, const Dataset& d);

enum class ModelKind { kMlp, kRandomForest, kGbdt, kKernelSvm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct MlpParams {
  Network network;
};

struct ForestParams {
  std::vector<DecisionTree> trees;
};

struct GbdtParams {
  double shrinkage = 0.1;
  std::vector<double> init_scores;              // per class
  std::vector<std::vector<DecisionTree>> rounds;  // rounds x classes
};

struct KsvmParams {
  double gamma = 1.0;
  Matrix support;            // S x n
  Matrix alpha;              // c x S
  double scale = 1.0;        // softmax temperature fitted on training data
  std::vector<double> offsets;  // per-class softmax intercepts
};

struct TrainMeta {
  std::uint64_t seed = 0;
  nlohmann::json hyperparameters = nlohmann::json::object();
  double dropout_rate = 0.0;
  bool degenerate = false;  // training data had a single class
};

class Model final : public Classifier {
 public:
  using Params = std::variant<MlpParams, ForestParams, GbdtParams, KsvmParams>;

  Model(Params params, std::size_t n_inputs, std::size_t n_classes, TrainMeta meta);

  ModelKind kind() const;
  std::size_t n_inputs() const override { return n_inputs_; }
  std::size_t n_classes() const override { return n_classes_; }
  void predict_into(std::span<const double> x, std::span<double> out) const override;

  const Params& params() const { return params_; }
  const TrainMeta& meta() const { return meta_; }

 private:
  Params params_;
  std::size_t n_inputs_;
  std::size_t n_classes_;
  TrainMeta meta_;
};

// Layer widths [n, 2n, 2n, c]; dropout acts on hidden layers at training time.
struct MlpArch {
  std::vector<std::size_t> widths;
  Activation hidden_activation = Activation::kRelu;
  double dropout_rate = 0.0;

  static MlpArch standard(std::size_t n_inputs, std::size_t n_classes,
                          double dropout_rate = 0.0);
};

struct MlpTrainOptions {
  int epochs = 200;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct ForestOptions {
  int n_trees = 100;
  int max_depth = 5;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0 selects round(sqrt(n))
  std::uint64_t seed = 0;
};

struct GbdtOptions {
  int n_trees = 100;
  int max_depth = 3;
  double shrinkage = 0.1;
  std::uint64_t seed = 0;
};

struct KsvmOptions {
  double gamma = 1.0;
  double regularization = 0.01;
  int iterations = 300;
  std::size_t max_support = 500;
  std::uint64_t seed = 0;
};

Model train_mlp(const Dataset& train, const MlpArch& arch, const MlpTrainOptions& options);
Model train_rf(const Dataset& train, const ForestOptions& options);
Model train_gbdt(const Dataset& train, const GbdtOptions& options);
Model train_ksvm(const Dataset& train, const KsvmOptions& options);

// Model files are JSON documents with format tag "shapleak-model".
nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc,
                      std::optional<ModelKind> expected = std::nullopt);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path,
                 std::optional<ModelKind> expected = std::nullopt);

}  // namespace shapleak

#endif  // SHAPLEAK_MODELS_H_
