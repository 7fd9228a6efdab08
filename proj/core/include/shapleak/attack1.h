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

#ifndef SHAPLEAK_ATTACK1_H_
#define SHAPLEAK_ATTACK1_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapleak/common.h"
#include "shapleak/network.h"
#include "shapleak/service.h"

namespace shapleak {

// Aligned (explanation, input) pairs gathered from an auxiliary dataset.
struct PairSet {
  Matrix shapley;   // m x d; d is n, or k when training on released entries only
  Matrix features;  // m x n
  std::vector<std::size_t> source_rows;  // row of the auxiliary data for each pair
  std::size_t collisions_removed = 0;
  bool partial = false;  // the oracle stopped answering before the end
  std::string warning;

  std::size_t size() const { return features.rows(); }
};

// Drops every pair whose Shapley row is exactly equal to another pair's.
PairSet make_pair_set(const Matrix& shapley, const Matrix& features);

struct PairOptions {
  double fill = 0.0;  // stands in for entries withheld by a top-k defense
  // When set, only these explanation entries form the attack input.
  std::optional<std::vector<std::size_t>> input_indices;
};

// Queries one explanation per auxiliary row. On budget exhaustion the pairs
// gathered so far are returned with `partial` set.
PairSet build_pairs(const Matrix& aux_features, ExplanationOracle& oracle,
                    const PairOptions& options = {});

// Attack input for one released explanation under `options`.
std::vector<double> attack_input(const PartialExplanation& e, const PairOptions& options);

struct InverseTrainOptions {
  double learning_rate = 0.05;
  int epochs = 1000;
  std::size_t batch_size = 32;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

// Inverse model psi: explanation -> input, widths [d, 4n, n], sigmoid on every layer.
class AttackModel {
 public:
  AttackModel() = default;
  AttackModel(Network network, InverseTrainOptions options, std::vector<double> loss_history);

  std::size_t n_inputs() const { return network_.n_inputs(); }
  std::size_t n_outputs() const { return network_.n_outputs(); }

  std::vector<double> reconstruct(std::span<const double> s) const;
  Matrix reconstruct_batch(const Matrix& s) const;

  const Network& network() const { return network_; }
  const InverseTrainOptions& options() const { return options_; }
  // Mean squared reconstruction loss over the pair set after each epoch.
  const std::vector<double>& loss_history() const { return loss_history_; }

 private:
  Network network_;
  InverseTrainOptions options_;
  std::vector<double> loss_history_;
};

AttackModel train_inverse(const PairSet& pairs, const InverseTrainOptions& options);

// Stored in the model file format under kind "attack-mlp".
nlohmann::json attack_model_to_json(const AttackModel& model);
AttackModel attack_model_from_json(const nlohmann::json& doc);
void save_attack_model(const AttackModel& model, const std::filesystem::path& path);
AttackModel load_attack_model(const std::filesystem::path& path);

}  // namespace shapleak

#endif  // SHAPLEAK_ATTACK1_H_
