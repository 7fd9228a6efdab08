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

#include "shapleak/attack1.h"

#include <algorithm>
#include <map>

#include "json_util.h"

namespace shapleak {
namespace {

constexpr int kAttackFormatVersion = 1;

}  // namespace

PairSet make_pair_set(const Matrix& shapley, const Matrix& features) {
  if (shapley.rows() != features.rows()) {
    throw std::invalid_argument("explanations and inputs must have equal row counts");
  }
  std::map<std::vector<double>, std::size_t> seen;
  for (std::size_t r = 0; r < shapley.rows(); ++r) {
    const auto row = shapley.row(r);
    ++seen[std::vector<double>(row.begin(), row.end())];
  }
  PairSet pairs;
  for (std::size_t r = 0; r < shapley.rows(); ++r) {
    const auto row = shapley.row(r);
    if (seen[std::vector<double>(row.begin(), row.end())] > 1) {
      ++pairs.collisions_removed;
      continue;
    }
    pairs.shapley.append_row(row);
    pairs.features.append_row(features.row(r));
    pairs.source_rows.push_back(r);
  }
  return pairs;
}

std::vector<double> attack_input(const PartialExplanation& e, const PairOptions& options) {
  std::vector<double> full = e.filled(options.fill);
  if (!options.input_indices) return full;
  std::vector<double> picked;
  picked.reserve(options.input_indices->size());
  for (std::size_t i : *options.input_indices) picked.push_back(full.at(i));
  return picked;
}

PairSet build_pairs(const Matrix& aux_features, ExplanationOracle& oracle,
                    const PairOptions& options) {
  const BatchResult batch = batch_explain(oracle, aux_features);
  Matrix shapley;
  for (const auto& q : batch.results) shapley.append_row(attack_input(q.explanation, options));
  std::vector<std::size_t> answered(batch.results.size());
  for (std::size_t i = 0; i < answered.size(); ++i) answered[i] = i;
  PairSet pairs = make_pair_set(shapley, aux_features.select_rows(answered));
  if (!batch.complete) {
    pairs.partial = true;
    pairs.warning = "only " + std::to_string(batch.results.size()) + " of " +
                    std::to_string(aux_features.rows()) + " auxiliary rows explained: " +
                    batch.error;
  }
  return pairs;
}

AttackModel::AttackModel(Network network, InverseTrainOptions options,
                         std::vector<double> loss_history)
    : network_(std::move(network)), options_(options), loss_history_(std::move(loss_history)) {}

std::vector<double> AttackModel::reconstruct(std::span<const double> s) const {
  if (s.size() != n_inputs()) {
    throw std::invalid_argument("explanation has " + std::to_string(s.size()) +
                                " entries, attack model expects " + std::to_string(n_inputs()));
  }
  return network_.forward(s);
}

Matrix AttackModel::reconstruct_batch(const Matrix& s) const {
  Matrix out(s.rows(), n_outputs());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    if (s.cols() != n_inputs()) throw std::invalid_argument("explanation width mismatch");
    network_.forward(s.row(r), out.row(r));
  }
  return out;
}

AttackModel train_inverse(const PairSet& pairs, const InverseTrainOptions& options) {
  if (pairs.size() < 2) throw std::invalid_argument("inverse training needs at least 2 pairs");
  if (options.epochs < 0 || options.batch_size == 0 || !(options.learning_rate > 0.0) ||
      options.weight_decay < 0.0) {
    throw std::invalid_argument("invalid inverse training options");
  }
  const std::size_t d = pairs.shapley.cols();
  const std::size_t n = pairs.features.cols();
  const std::vector<std::size_t> widths = {d, 4 * n, n};
  Rng rng(options.seed);
  Network net = Network::create(widths, Activation::kSigmoid, Activation::kSigmoid,
                                /*softmax_head=*/false, rng);
  std::vector<double> history;
  if (options.epochs > 0) {
    SgdOptions sgd;
    sgd.learning_rate = options.learning_rate;
    sgd.epochs = options.epochs;
    sgd.batch_size = options.batch_size;
    sgd.weight_decay = options.weight_decay;
    sgd.seed = derive_seed(options.seed, 1);
    sgd.loss = Loss::kSquaredError;
    history = train_sgd(net, pairs.shapley, pairs.features, sgd);
  }
  return AttackModel(std::move(net), options, std::move(history));
}

nlohmann::json attack_model_to_json(const AttackModel& model) {
  const auto& o = model.options();
  return {{"format", "shapleak-model"},
          {"version", kAttackFormatVersion},
          {"kind", "attack-mlp"},
          {"n_inputs", model.n_inputs()},
          {"n_outputs", model.n_outputs()},
          {"train_meta",
           {{"learning_rate", o.learning_rate},
            {"epochs", o.epochs},
            {"batch_size", o.batch_size},
            {"weight_decay", o.weight_decay},
            {"seed", o.seed},
            {"loss_history", model.loss_history()}}},
          {"params", {{"network", internal::network_to_json(model.network())}}}};
}

AttackModel attack_model_from_json(const nlohmann::json& doc) {
  using internal::field;
  internal::expect_format(doc, "shapleak-model", kAttackFormatVersion);
  const auto kind = field<std::string>(doc, "kind");
  if (kind != "attack-mlp") {
    throw FormatError("kind mismatch: file holds '" + kind + "', expected 'attack-mlp'");
  }
  const auto& mj = doc.at("train_meta");
  InverseTrainOptions o;
  o.learning_rate = field<double>(mj, "learning_rate");
  o.epochs = field<int>(mj, "epochs");
  o.batch_size = field<std::size_t>(mj, "batch_size");
  o.weight_decay = field<double>(mj, "weight_decay");
  o.seed = field<std::uint64_t>(mj, "seed");
  Network net = internal::network_from_json(doc.at("params").at("network"));
  if (net.n_inputs() != field<std::size_t>(doc, "n_inputs") ||
      net.n_outputs() != field<std::size_t>(doc, "n_outputs")) {
    throw FormatError("attack model widths disagree with the stored network");
  }
  return AttackModel(std::move(net), o, field<std::vector<double>>(mj, "loss_history"));
}

void save_attack_model(const AttackModel& model, const std::filesystem::path& path) {
  internal::write_json_file(attack_model_to_json(model), path);
}

AttackModel load_attack_model(const std::filesystem::path& path) {
  return attack_model_from_json(internal::read_json_file(path));
}

}  // namespace shapleak
