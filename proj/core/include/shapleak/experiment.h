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

#ifndef SHAPLEAK_EXPERIMENT_H_
#define SHAPLEAK_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapleak/attack1.h"
#include "shapleak/attack2.h"
#include "shapleak/dataset.h"
#include "shapleak/defense.h"
#include "shapleak/explain.h"
#include "shapleak/models.h"
#include "shapleak/synth.h"

namespace shapleak {

// Trains a target model of `kind` from a JSON object of hyper-parameters.
// Unknown hyper-parameter names are rejected.
Model train_model(ModelKind kind, const Dataset& train, const nlohmann::json& hyperparameters,
                  double dropout_rate, std::uint64_t seed);

struct DatasetSpec {
  std::optional<SynthConfig> synthetic = SynthConfig{};
  std::filesystem::path csv;
  std::string label_column = "label";
};

enum class SweepKind { kNone, kQueries, kSamplingError, kQuantize, kDropout, kTopk };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& name);

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  ModelKind model_kind = ModelKind::kMlp;
  nlohmann::json model_hyperparameters = nlohmann::json::object();
  double dropout_rate = 0.0;
  ExplainMethod method = ExplainMethod::sampled(50);

  bool run_attack1 = true;
  bool run_attack2 = true;
  std::size_t aux_size = 800;
  InverseTrainOptions attack1;
  // Train psi on the released entries only when a top-k defense is active.
  bool attack1_released_only = false;
  std::vector<std::size_t> queries = {100};  // attack-2 random query counts
  Attack2Config attack2;

  DefenseConfig defense;
  std::size_t references = 10;
  std::size_t val_size = 200;
  std::vector<std::uint64_t> seeds = {0};
  // Per-key service budget; 0 means exactly what the run needs.
  std::int64_t budget = 0;

  SweepKind sweep = SweepKind::kNone;
  std::vector<double> sweep_values;

  // Throws std::invalid_argument describing the first problem found.
  void validate() const;
  // Queries one attack key spends per reference sample.
  std::int64_t queries_needed() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
// Relative CSV paths resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ResultRow {
  std::string experiment_id;
  std::string setting;
  double setting_value = 0.0;
  std::string model;
  std::string attack;  // "attack1" or "attack2"
  std::uint64_t seed = 0;
  double l1 = 0.0;     // attack 2: recovered cells only
  double sr = 0.0;
  double rg_e = 0.0;
  double rg_u = 0.0;
  double rg_n = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> per_feature_l1;
  std::vector<double> per_feature_macc;
  std::string error;  // empty when the row completed
};

using ResultTable = std::vector<ResultRow>;

// Everything the attacks need about one trained target.
struct Target {
  Dataset data;
  Split split;
  std::shared_ptr<const Model> model;
  Matrix val_x;                   // evaluation rows
  std::vector<double> macc;       // per feature, on the evaluation rows
  Matrix baseline_rg_e, baseline_rg_u, baseline_rg_n;
};

Target build_target(const ExperimentConfig& cfg, std::uint64_t seed);

// One (setting, seed) cell of an experiment; `cfg` already has the setting
// applied. Returns one row per selected attack, averaged over references.
ResultTable run_setting(const ExperimentConfig& cfg, const Target& target, std::uint64_t seed,
                        const std::string& setting, double setting_value);

// The settings a sweep expands to: (label, value, config with it applied).
struct Setting {
  std::string label;
  double value = 0.0;
  ExperimentConfig cfg;
};
std::vector<Setting> expand_settings(const ExperimentConfig& cfg);

ResultTable run_experiment(const ExperimentConfig& cfg);
// Recomputes the row for `row.setting` and `row.seed`.
ResultRow rerun(const ExperimentConfig& cfg, const ResultRow& row);

// Column order of emitted CSV files.
const std::vector<std::string>& result_columns();
void emit_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable parse_csv(const std::filesystem::path& path);
// Seed-averaged (x, y, series) triples; series is "<model>/<attack>/<metric>".
void emit_plotdata(const ResultTable& table, const std::filesystem::path& path);

struct SummaryRow {
  std::string setting;
  std::string model;
  std::string attack;
  std::size_t seeds = 0;
  double l1_mean = 0.0, l1_sd = 0.0;
  double sr_mean = 0.0, sr_sd = 0.0;
  double rg_e = 0.0, rg_u = 0.0, rg_n = 0.0;
  std::size_t failures = 0;
};
std::vector<SummaryRow> summarize(const ResultTable& table);

}  // namespace shapleak

#endif  // SHAPLEAK_EXPERIMENT_H_
