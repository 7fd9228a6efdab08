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

#include "shapleak/models.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json_util.h"

namespace shapleak {
namespace {

constexpr int kModelFormatVersion = 1;
constexpr double kMinPrior = 1e-15;

std::vector<double> class_priors(const Dataset& d) {
  std::vector<double> prior(d.n_classes, 0.0);
  for (int y : d.labels) prior[y] += 1.0;
  for (double& p : prior) p /= static_cast<double>(d.rows());
  return prior;
}

bool single_class(const Dataset& d) {
  return std::ranges::all_of(d.labels, [&](int y) { return y == d.labels.front(); });
}

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

void ksvm_raw_scores(const KsvmParams& p, std::span<const double> x, std::span<double> out) {
  thread_local std::vector<double> kernel;
  kernel.resize(p.support.rows());
  for (std::size_t j = 0; j < p.support.rows(); ++j) kernel[j] = rbf(x, p.support.row(j), p.gamma);
  for (std::size_t k = 0; k < p.alpha.rows(); ++k) {
    const auto a = p.alpha.row(k);
    out[k] = std::inner_product(a.begin(), a.end(), kernel.begin(), 0.0);
  }
}

void check_train_input(const Dataset& d) {
  d.validate();
}

}  // namespace

std::vector<double> Classifier::predict(std::span<const double> x) const {
  if (x.size() != n_inputs()) {
    throw std::invalid_argument("predict: expected " + std::to_string(n_inputs()) +
                                " features, got " + std::to_string(x.size()));
  }
  std::vector<double> out(n_classes());
  predict_into(x, out);
  return out;
}

Matrix predict_batch(const Classifier& model, const Matrix& x) {
  if (x.cols() != model.n_inputs()) throw std::invalid_argument("predict_batch: width mismatch");
  Matrix out(x.rows(), model.n_classes());
  for (std::size_t r = 0; r < x.rows(); ++r) model.predict_into(x.row(r), out.row(r));
  return out;
}

double accuracy(const Classifier& model, const Dataset& d) {
  const Matrix p = predict_batch(model, d.features);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto row = p.row(r);
    const auto top = std::ranges::max_element(row) - row.begin();
    hits += top == d.labels[r];
  }
  return static_cast<double>(hits) / static_cast<double>(d.rows());
}

double log_loss(const Classifier& model, const Dataset& d) {
  const Matrix p = predict_batch(model, d.features);
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    total -= std::log(std::max(p(r, d.labels[r]), 1e-300));
  }
  return total / static_cast<double>(d.rows());
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMlp:
      return "mlp";
    case ModelKind::kRandomForest:
      return "rf";
    case ModelKind::kGbdt:
      return "gbdt";
    case ModelKind::kKernelSvm:
      return "ksvm";
  }
  return "mlp";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "mlp" || name == "nn") return ModelKind::kMlp;
  if (name == "rf") return ModelKind::kRandomForest;
  if (name == "gbdt") return ModelKind::kGbdt;
  if (name == "ksvm" || name == "svm") return ModelKind::kKernelSvm;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

Model::Model(Params params, std::size_t n_inputs, std::size_t n_classes, TrainMeta meta)
    : params_(std::move(params)), n_inputs_(n_inputs), n_classes_(n_classes),
      meta_(std::move(meta)) {
  if (n_inputs_ == 0 || n_classes_ == 0) throw std::invalid_argument("empty model shape");
  if (const auto* mlp = std::get_if<MlpParams>(&params_)) {
    if (mlp->network.n_inputs() != n_inputs_ || mlp->network.n_outputs() != n_classes_ ||
        !mlp->network.softmax_head()) {
      throw std::invalid_argument("MLP network shape does not match the model");
    }
  } else if (const auto* gbdt = std::get_if<GbdtParams>(&params_)) {
    if (gbdt->init_scores.size() != n_classes_) {
      throw std::invalid_argument("GBDT init scores do not match class count");
    }
    for (const auto& round : gbdt->rounds) {
      if (round.size() != n_classes_) throw std::invalid_argument("GBDT round width mismatch");
    }
  } else if (const auto* svm = std::get_if<KsvmParams>(&params_)) {
    if (svm->alpha.rows() != n_classes_ || svm->alpha.cols() != svm->support.rows() ||
        svm->support.cols() != n_inputs_ || svm->offsets.size() != n_classes_) {
      throw std::invalid_argument("kernel SVM parameters do not match the model");
    }
  } else if (const auto* rf = std::get_if<ForestParams>(&params_)) {
    if (rf->trees.empty()) throw std::invalid_argument("forest has no trees");
  }
}

ModelKind Model::kind() const {
  return static_cast<ModelKind>(params_.index());
}

void Model::predict_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_inputs_ || out.size() != n_classes_) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MlpParams>) {
          p.network.forward(x, out);
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          thread_local std::vector<int> votes;
          votes.assign(n_classes_, 0);
          for (const auto& tree : p.trees) ++votes[tree.leaf_for(x).label];
          const double total = static_cast<double>(p.trees.size());
          for (std::size_t k = 0; k < n_classes_; ++k) out[k] = votes[k] / total;
        } else if constexpr (std::is_same_v<T, GbdtParams>) {
          std::ranges::copy(p.init_scores, out.begin());
          for (const auto& round : p.rounds) {
            for (std::size_t k = 0; k < n_classes_; ++k) {
              out[k] += p.shrinkage * round[k].leaf_for(x).value;
            }
          }
          softmax_inplace(out);
        } else {
          ksvm_raw_scores(p, x, out);
          for (std::size_t k = 0; k < n_classes_; ++k) out[k] = p.scale * out[k] + p.offsets[k];
          softmax_inplace(out);
        }
      },
      params_);
}

MlpArch MlpArch::standard(std::size_t n_inputs, std::size_t n_classes, double dropout_rate) {
  MlpArch arch;
  arch.widths = {n_inputs, 2 * n_inputs, 2 * n_inputs, n_classes};
  arch.dropout_rate = dropout_rate;
  return arch;
}

Model train_mlp(const Dataset& train, const MlpArch& arch, const MlpTrainOptions& options) {
  check_train_input(train);
  if (arch.widths.size() < 2 || arch.widths.front() != train.cols() ||
      arch.widths.back() != static_cast<std::size_t>(train.n_classes)) {
    throw std::invalid_argument("MLP widths must start at n and end at c");
  }
  if (std::ranges::any_of(arch.widths, [](std::size_t w) { return w == 0; })) {
    throw std::invalid_argument("MLP widths must be positive");
  }
  if (arch.dropout_rate < 0.0 || arch.dropout_rate >= 1.0) {
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }
  Rng init_rng(derive_seed(options.seed, 1));
  const double hidden_gain = arch.hidden_activation == Activation::kRelu ? std::sqrt(2.0) : 1.0;
  // Small output gain keeps the untrained network close to uniform.
  Network net = Network::create(arch.widths, arch.hidden_activation, Activation::kIdentity,
                                /*softmax_head=*/true, init_rng, hidden_gain, 0.1);

  Matrix onehot(train.rows(), train.n_classes);
  for (std::size_t r = 0; r < train.rows(); ++r) onehot(r, train.labels[r]) = 1.0;
  SgdOptions sgd;
  sgd.learning_rate = options.learning_rate;
  sgd.epochs = options.epochs;
  sgd.batch_size = options.batch_size;
  sgd.dropout_rate = arch.dropout_rate;
  sgd.seed = derive_seed(options.seed, 2);
  sgd.loss = Loss::kSoftmaxCrossEntropy;
  if (options.epochs > 0) train_sgd(net, train.features, onehot, sgd);

  TrainMeta meta;
  meta.seed = options.seed;
  meta.dropout_rate = arch.dropout_rate;
  meta.degenerate = single_class(train);
  meta.hyperparameters = {{"epochs", options.epochs},
                          {"learning_rate", options.learning_rate},
                          {"batch_size", options.batch_size},
                          {"widths", arch.widths},
                          {"hidden_activation", to_string(arch.hidden_activation)},
                          {"dropout_rate", arch.dropout_rate}};
  return Model(MlpParams{std::move(net)}, train.cols(), train.n_classes, std::move(meta));
}

Model train_rf(const Dataset& train, const ForestOptions& options) {
  check_train_input(train);
  if (options.n_trees < 1 || options.max_depth < 0) {
    throw std::invalid_argument("forest needs n_trees >= 1 and max_depth >= 0");
  }
  const std::size_t n = train.cols();
  const std::size_t m = train.rows();
  TreeOptions tree_options;
  tree_options.max_depth = options.max_depth;
  tree_options.max_features =
      options.max_features > 0
          ? std::min(options.max_features, n)
          : std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::lround(std::sqrt(static_cast<double>(n)))));

  ForestParams params;
  std::vector<std::size_t> rows(m);
  for (int t = 0; t < options.n_trees; ++t) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(t)));
    if (options.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    params.trees.push_back(fit_classification_tree(train.features, train.labels,
                                                   train.n_classes, rows, tree_options, &rng));
  }
  TrainMeta meta;
  meta.seed = options.seed;
  meta.degenerate = single_class(train);
  meta.hyperparameters = {{"n_trees", options.n_trees},
                          {"max_depth", options.max_depth},
                          {"bootstrap", options.bootstrap},
                          {"max_features", tree_options.max_features}};
  return Model(std::move(params), n, train.n_classes, std::move(meta));
}

Model train_gbdt(const Dataset& train, const GbdtOptions& options) {
  check_train_input(train);
  if (options.n_trees < 0 || options.max_depth < 0 || options.shrinkage < 0.0) {
    throw std::invalid_argument("invalid GBDT options");
  }
  const std::size_t m = train.rows();
  const std::size_t c = static_cast<std::size_t>(train.n_classes);
  GbdtParams params;
  params.shrinkage = options.shrinkage;
  for (double p : class_priors(train)) params.init_scores.push_back(std::log(std::max(p, kMinPrior)));

  Matrix scores(m, c);
  for (std::size_t r = 0; r < m; ++r) std::ranges::copy(params.init_scores, scores.row(r).begin());
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), 0);
  TreeOptions tree_options;
  tree_options.max_depth = options.max_depth;

  Matrix prob(m, c);
  std::vector<double> residual(m);
  const double newton_factor = c > 1 ? static_cast<double>(c - 1) / static_cast<double>(c) : 1.0;
  for (int t = 0; t < options.n_trees; ++t) {
    for (std::size_t r = 0; r < m; ++r) {
      std::ranges::copy(scores.row(r), prob.row(r).begin());
      softmax_inplace(prob.row(r));
    }
    std::vector<DecisionTree> round;
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t r = 0; r < m; ++r) {
        residual[r] = (train.labels[r] == static_cast<int>(k) ? 1.0 : 0.0) - prob(r, k);
      }
      const LeafValueFn newton = [&](std::span<const std::size_t> leaf_rows) {
        double num = 0.0, den = 0.0;
        for (std::size_t r : leaf_rows) {
          num += residual[r];
          den += std::abs(residual[r]) * (1.0 - std::abs(residual[r]));
        }
        return den < 1e-12 ? 0.0 : newton_factor * num / den;
      };
      round.push_back(fit_regression_tree(train.features, residual, rows, tree_options, newton));
    }
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t k = 0; k < c; ++k) {
        scores(r, k) += options.shrinkage * round[k].leaf_for(train.features.row(r)).value;
      }
    }
    params.rounds.push_back(std::move(round));
  }
  TrainMeta meta;
  meta.seed = options.seed;
  meta.degenerate = single_class(train);
  meta.hyperparameters = {{"n_trees", options.n_trees},
                          {"max_depth", options.max_depth},
                          {"shrinkage", options.shrinkage}};
  return Model(std::move(params), train.cols(), c, std::move(meta));
}

Model train_ksvm(const Dataset& train, const KsvmOptions& options) {
  check_train_input(train);
  if (!(options.gamma >= 0.0) || !(options.regularization > 0.0) || options.iterations < 1 ||
      options.max_support < 1) {
    throw std::invalid_argument("invalid kernel SVM options");
  }
  const std::size_t m = train.rows();
  const std::size_t c = static_cast<std::size_t>(train.n_classes);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(options.seed, 1));
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(m, options.max_support));
  std::ranges::sort(order);
  const std::size_t s = order.size();

  KsvmParams params;
  params.gamma = options.gamma;
  params.support = train.features.select_rows(order);
  Matrix kernel(s, s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i; j < s; ++j) {
      kernel(i, j) = kernel(j, i) = rbf(params.support.row(i), params.support.row(j), options.gamma);
    }
  }

  // Full-batch functional subgradient descent on the regularized hinge loss,
  // one-vs-rest per class, step size 1 / (lambda t).
  const double lambda = options.regularization;
  params.alpha = Matrix(c, s);
  std::vector<double> f(s);
  for (std::size_t k = 0; k < c; ++k) {
    auto alpha = params.alpha.row(k);
    for (int t = 1; t <= options.iterations; ++t) {
      for (std::size_t i = 0; i < s; ++i) {
        const auto krow = kernel.row(i);
        f[i] = std::inner_product(krow.begin(), krow.end(), alpha.begin(), 0.0);
      }
      const double eta = 1.0 / (lambda * t);
      for (double& a : alpha) a *= 1.0 - eta * lambda;
      for (std::size_t i = 0; i < s; ++i) {
        const double y = train.labels[order[i]] == static_cast<int>(k) ? 1.0 : -1.0;
        if (y * f[i] < 1.0) alpha[i] += eta * y / static_cast<double>(s);
      }
    }
  }

  // Softmax calibration: fit a shared scale and per-class intercepts by
  // gradient descent on the training log-loss.
  Matrix raw(m, c);
  params.scale = 1.0;
  params.offsets.assign(c, 0.0);
  for (std::size_t r = 0; r < m; ++r) ksvm_raw_scores(params, train.features.row(r), raw.row(r));
  const auto prior = class_priors(train);
  for (std::size_t k = 0; k < c; ++k) params.offsets[k] = std::log(std::max(prior[k], kMinPrior));
  std::vector<double> z(c), grad_b(c);
  for (int it = 0; it < 2000; ++it) {
    double grad_a = 0.0;
    std::ranges::fill(grad_b, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t k = 0; k < c; ++k) z[k] = params.scale * raw(r, k) + params.offsets[k];
      softmax_inplace(z);
      for (std::size_t k = 0; k < c; ++k) {
        const double g = z[k] - (train.labels[r] == static_cast<int>(k) ? 1.0 : 0.0);
        grad_b[k] += g;
        grad_a += g * raw(r, k);
      }
    }
    const double inv = 1.0 / static_cast<double>(m);
    double step_norm = 0.0;
    params.scale = std::max(0.0, params.scale - 0.5 * grad_a * inv);
    for (std::size_t k = 0; k < c; ++k) {
      params.offsets[k] -= 1.0 * grad_b[k] * inv;
      step_norm = std::max(step_norm, std::abs(grad_b[k] * inv));
    }
    if (!std::isfinite(params.scale)) throw DivergenceError("SVM calibration diverged", it);
    if (step_norm < 1e-13 && std::abs(grad_a * inv) < 1e-13) break;
  }

  TrainMeta meta;
  meta.seed = options.seed;
  meta.degenerate = single_class(train);
  meta.hyperparameters = {{"gamma", options.gamma},
                          {"regularization", options.regularization},
                          {"iterations", options.iterations},
                          {"support_size", s}};
  return Model(std::move(params), train.cols(), c, std::move(meta));
}

namespace internal {

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    layers.push_back({{"inputs", layer.inputs},
                      {"outputs", layer.outputs},
                      {"activation", to_string(layer.activation)},
                      {"weights", layer.weights},
                      {"bias", layer.bias}});
  }
  return {{"softmax_head", net.softmax_head()}, {"layers", layers}};
}

Network network_from_json(const nlohmann::json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j.at("layers")) {
    DenseLayer layer;
    layer.inputs = field<std::size_t>(lj, "inputs");
    layer.outputs = field<std::size_t>(lj, "outputs");
    layer.activation = activation_from_string(field<std::string>(lj, "activation"));
    layer.weights = field<std::vector<double>>(lj, "weights");
    layer.bias = field<std::vector<double>>(lj, "bias");
    layers.push_back(std::move(layer));
  }
  try {
    return Network(std::move(layers), field<bool>(j, "softmax_head"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("network: ") + e.what());
  }
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label, n.value});
  }
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  try {
    for (const auto& nj : j) {
      if (!nj.is_array() || nj.size() != 6) throw FormatError("tree node must have 6 fields");
      TreeNode n;
      n.feature = nj[0].get<int>();
      n.threshold = nj[1].get<double>();
      n.left = nj[2].get<int>();
      n.right = nj[3].get<int>();
      n.label = nj[4].get<int>();
      n.value = nj[5].get<double>();
      nodes.push_back(n);
    }
    return DecisionTree(std::move(nodes));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tree: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("tree: ") + e.what());
  }
}

}  // namespace internal

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json doc;
  doc["format"] = "shapleak-model";
  doc["version"] = kModelFormatVersion;
  doc["kind"] = to_string(model.kind());
  doc["n_inputs"] = model.n_inputs();
  doc["n_classes"] = model.n_classes();
  doc["train_meta"] = {{"seed", model.meta().seed},
                       {"hyperparameters", model.meta().hyperparameters},
                       {"dropout_rate", model.meta().dropout_rate},
                       {"degenerate", model.meta().degenerate}};
  nlohmann::json params;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MlpParams>) {
          params["network"] = internal::network_to_json(p.network);
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          params["trees"] = nlohmann::json::array();
          for (const auto& t : p.trees) params["trees"].push_back(internal::tree_to_json(t));
        } else if constexpr (std::is_same_v<T, GbdtParams>) {
          params["shrinkage"] = p.shrinkage;
          params["init_scores"] = p.init_scores;
          params["rounds"] = nlohmann::json::array();
          for (const auto& round : p.rounds) {
            nlohmann::json rj = nlohmann::json::array();
            for (const auto& t : round) rj.push_back(internal::tree_to_json(t));
            params["rounds"].push_back(rj);
          }
        } else {
          params["gamma"] = p.gamma;
          params["support"] = internal::matrix_to_json(p.support);
          params["alpha"] = internal::matrix_to_json(p.alpha);
          params["scale"] = p.scale;
          params["offsets"] = p.offsets;
        }
      },
      model.params());
  doc["params"] = std::move(params);
  return doc;
}

Model model_from_json(const nlohmann::json& doc, std::optional<ModelKind> expected) {
  using internal::field;
  internal::expect_format(doc, "shapleak-model", kModelFormatVersion);
  const std::string kind_name = field<std::string>(doc, "kind");
  ModelKind kind;
  try {
    kind = model_kind_from_string(kind_name);
  } catch (const std::invalid_argument&) {
    throw FormatError("kind mismatch: '" + kind_name + "' is not a target model kind");
  }
  if (expected && *expected != kind) {
    throw FormatError("kind mismatch: file holds '" + kind_name + "', expected '" +
                      to_string(*expected) + "'");
  }
  const auto n_inputs = field<std::size_t>(doc, "n_inputs");
  const auto n_classes = field<std::size_t>(doc, "n_classes");
  TrainMeta meta;
  const auto& mj = doc.at("train_meta");
  meta.seed = field<std::uint64_t>(mj, "seed");
  meta.hyperparameters = mj.at("hyperparameters");
  meta.dropout_rate = field<double>(mj, "dropout_rate");
  meta.degenerate = field<bool>(mj, "degenerate");

  const auto& pj = doc.at("params");
  Model::Params params;
  switch (kind) {
    case ModelKind::kMlp:
      params = MlpParams{internal::network_from_json(pj.at("network"))};
      break;
    case ModelKind::kRandomForest: {
      ForestParams p;
      for (const auto& t : pj.at("trees")) p.trees.push_back(internal::tree_from_json(t));
      params = std::move(p);
      break;
    }
    case ModelKind::kGbdt: {
      GbdtParams p;
      p.shrinkage = field<double>(pj, "shrinkage");
      p.init_scores = field<std::vector<double>>(pj, "init_scores");
      for (const auto& rj : pj.at("rounds")) {
        std::vector<DecisionTree> round;
        for (const auto& t : rj) round.push_back(internal::tree_from_json(t));
        p.rounds.push_back(std::move(round));
      }
      params = std::move(p);
      break;
    }
    case ModelKind::kKernelSvm: {
      KsvmParams p;
      p.gamma = field<double>(pj, "gamma");
      p.support = internal::matrix_from_json(pj.at("support"));
      p.alpha = internal::matrix_from_json(pj.at("alpha"));
      p.scale = field<double>(pj, "scale");
      p.offsets = field<std::vector<double>>(pj, "offsets");
      params = std::move(p);
      break;
    }
  }
  try {
    return Model(std::move(params), n_inputs, n_classes, std::move(meta));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  internal::write_json_file(model_to_json(model), path);
}

Model load_model(const std::filesystem::path& path, std::optional<ModelKind> expected) {
  const auto doc = internal::read_json_file(path);
  try {
    return model_from_json(doc, expected);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace shapleak
