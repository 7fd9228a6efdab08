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

#include "shapleak/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json_util.h"
#include "shapleak/metrics.h"
#include "shapleak/service.h"
#include "shapleak/stats.h"

namespace shapleak {
namespace {

using internal::field;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// RNG streams derived from a row seed.
enum Stream : std::uint64_t {
  kDataStream = 1,
  kSplitStream = 2,
  kModelStream = 3,
  kBaselineStream = 5,
  kReferenceStream = 100,
  kServiceStream = 200,
  kInverseStream = 300,
  kQueryStream = 400,
};

constexpr std::size_t kMaxReferences = 99;

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::ranges::find_if(allowed, [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw FormatError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = field<T>(j, key);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_setting_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double parse_double_cell(const std::string& s) {
  if (s == "nan") return kNaN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("bad numeric cell '" + s + "'");
  return v;
}

std::string join_vector(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_vector(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream in(s);
  std::string cell;
  while (std::getline(in, cell, ';')) out.push_back(parse_double_cell(cell));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? kNaN : mean(v);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix rows_of(const Matrix& m, std::size_t count) {
  if (count > m.rows()) {
    throw std::invalid_argument("need " + std::to_string(count) + " rows, split has " +
                                std::to_string(m.rows()));
  }
  Matrix out(count, m.cols());
  std::copy_n(m.data().begin(), count * m.cols(), out.data().begin());
  return out;
}

ResultRow blank_row(const ExperimentConfig& cfg, const std::string& attack, std::uint64_t seed,
                    const std::string& setting, double value) {
  ResultRow row;
  row.experiment_id = cfg.name;
  row.setting = setting;
  row.setting_value = value;
  row.model = to_string(cfg.model_kind);
  row.attack = attack;
  row.seed = seed;
  row.l1 = row.sr = row.rg_e = row.rg_u = row.rg_n = kNaN;
  return row;
}

std::vector<std::string> selected_attacks(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.run_attack1) out.push_back("attack1");
  if (cfg.run_attack2) out.push_back("attack2");
  return out;
}

}  // namespace

// --- target models -------------------------------------------------------

Model train_model(ModelKind kind, const Dataset& train, const nlohmann::json& hp,
                  double dropout_rate, std::uint64_t seed) {
  if (!hp.is_object()) throw FormatError("model hyper-parameters must be an object");
  if (kind != ModelKind::kMlp && dropout_rate != 0.0) {
    throw std::invalid_argument("dropout applies to the mlp model only");
  }
  switch (kind) {
    case ModelKind::kMlp: {
      reject_unknown_keys(hp, {"epochs", "learning_rate", "batch_size"}, "mlp");
      MlpTrainOptions o;
      read_optional(hp, "epochs", o.epochs);
      read_optional(hp, "learning_rate", o.learning_rate);
      read_optional(hp, "batch_size", o.batch_size);
      o.seed = seed;
      return train_mlp(train,
                       MlpArch::standard(train.cols(), train.n_classes, dropout_rate), o);
    }
    case ModelKind::kRandomForest: {
      reject_unknown_keys(hp, {"n_trees", "max_depth", "bootstrap", "max_features"}, "rf");
      ForestOptions o;
      read_optional(hp, "n_trees", o.n_trees);
      read_optional(hp, "max_depth", o.max_depth);
      read_optional(hp, "bootstrap", o.bootstrap);
      read_optional(hp, "max_features", o.max_features);
      o.seed = seed;
      return train_rf(train, o);
    }
    case ModelKind::kGbdt: {
      reject_unknown_keys(hp, {"n_trees", "max_depth", "shrinkage"}, "gbdt");
      GbdtOptions o;
      read_optional(hp, "n_trees", o.n_trees);
      read_optional(hp, "max_depth", o.max_depth);
      read_optional(hp, "shrinkage", o.shrinkage);
      o.seed = seed;
      return train_gbdt(train, o);
    }
    case ModelKind::kKernelSvm: {
      reject_unknown_keys(hp, {"gamma", "regularization", "iterations", "max_support"}, "ksvm");
      KsvmOptions o;
      read_optional(hp, "gamma", o.gamma);
      read_optional(hp, "regularization", o.regularization);
      read_optional(hp, "iterations", o.iterations);
      read_optional(hp, "max_support", o.max_support);
      o.seed = seed;
      return train_ksvm(train, o);
    }
  }
  throw std::logic_error("unhandled model kind");
}

// --- configuration -------------------------------------------------------

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kNone: return "none";
    case SweepKind::kQueries: return "queries";
    case SweepKind::kSamplingError: return "sampling_error";
    case SweepKind::kQuantize: return "quantize";
    case SweepKind::kDropout: return "dropout";
    case SweepKind::kTopk: return "topk";
  }
  return "none";
}

SweepKind sweep_kind_from_string(const std::string& name) {
  for (SweepKind k : {SweepKind::kNone, SweepKind::kQueries, SweepKind::kSamplingError,
                      SweepKind::kQuantize, SweepKind::kDropout, SweepKind::kTopk}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown sweep '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (dataset.synthetic) {
    dataset.synthetic->validate();
  } else if (dataset.csv.empty()) {
    throw std::invalid_argument("dataset needs a synthetic spec or a csv path");
  }
  if (!run_attack1 && !run_attack2) throw std::invalid_argument("no attack selected");
  if (references < 1 || references > kMaxReferences) {
    throw std::invalid_argument("references must lie in [1, " + std::to_string(kMaxReferences) +
                                "]");
  }
  if (val_size < 1) throw std::invalid_argument("val_size must be at least 1");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (method.type == ExplainMethodType::kSampled && method.nu < 1) {
    throw std::invalid_argument("sampled explanations need nu >= 1");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }
  if (run_attack1 && aux_size < 2) throw std::invalid_argument("aux_size must be at least 2");
  if (run_attack1 && (attack1.epochs < 0 || attack1.batch_size == 0 ||
                      !(attack1.learning_rate > 0.0) || attack1.weight_decay < 0.0)) {
    throw std::invalid_argument("invalid attack1 training options");
  }
  if (run_attack2) {
    attack2.validate();
    if (queries.empty()) throw std::invalid_argument("attack2 needs at least one query count");
    for (std::size_t q : queries) {
      if (q < attack2.min_candidates) {
        throw std::invalid_argument("query count " + std::to_string(q) +
                                    " is below min_candidates");
      }
    }
    if (sweep != SweepKind::kQueries && queries.size() != 1) {
      throw std::invalid_argument("several query counts need the queries sweep");
    }
  }
  if (sweep != SweepKind::kNone && sweep != SweepKind::kQueries && sweep_values.empty()) {
    throw std::invalid_argument("sweep '" + to_string(sweep) + "' needs values");
  }
  if (budget < 0) throw std::invalid_argument("budget must be non-negative");
  if (budget > 0) {
    for (const auto& s : expand_settings(*this)) {
      if (s.cfg.queries_needed() > budget) {
        throw std::invalid_argument("setting " + s.label + " needs " +
                                    std::to_string(s.cfg.queries_needed()) +
                                    " queries per key, budget is " + std::to_string(budget));
      }
    }
  }
}

std::int64_t ExperimentConfig::queries_needed() const {
  std::size_t most = 0;
  if (run_attack1) most = std::max(most, aux_size);
  if (run_attack2) most = std::max(most, *std::ranges::max_element(queries));
  return static_cast<std::int64_t>(most + val_size);
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  try {
    reject_unknown_keys(doc,
                        {"name", "dataset", "model", "explain", "attacks", "attack1", "attack2",
                         "defense", "references", "val_size", "seeds", "budget", "sweep"},
                        "experiment");
    read_optional(doc, "name", cfg.name);
    if (doc.contains("dataset")) {
      const auto& dj = doc.at("dataset");
      reject_unknown_keys(dj, {"synthetic", "csv", "label_column"}, "dataset");
      if (dj.contains("csv")) {
        cfg.dataset.synthetic.reset();
        cfg.dataset.csv = field<std::string>(dj, "csv");
        read_optional(dj, "label_column", cfg.dataset.label_column);
      }
      if (dj.contains("synthetic")) {
        if (dj.contains("csv")) throw FormatError("dataset: give either synthetic or csv");
        const auto& sj = dj.at("synthetic");
        reject_unknown_keys(sj, {"n_features", "important_fraction", "n_samples", "cluster_std"},
                            "dataset.synthetic");
        SynthConfig sc;
        read_optional(sj, "n_features", sc.n_features);
        read_optional(sj, "important_fraction", sc.important_fraction);
        read_optional(sj, "n_samples", sc.n_samples);
        read_optional(sj, "cluster_std", sc.cluster_std);
        cfg.dataset.synthetic = sc;
      }
    }
    if (doc.contains("model")) {
      nlohmann::json mj = doc.at("model");
      if (mj.contains("kind")) {
        cfg.model_kind = model_kind_from_string(field<std::string>(mj, "kind"));
      }
      read_optional(mj, "dropout", cfg.dropout_rate);
      mj.erase("kind");
      mj.erase("dropout");
      cfg.model_hyperparameters = mj;
    }
    if (doc.contains("explain")) {
      const auto& ej = doc.at("explain");
      reject_unknown_keys(ej, {"method", "nu"}, "explain");
      const auto method = field<std::string>(ej, "method");
      if (method == "exact") {
        cfg.method = ExplainMethod::exact();
      } else if (method == "sampled") {
        cfg.method = ExplainMethod::sampled(field<int>(ej, "nu"));
      } else {
        throw FormatError("explain.method must be 'exact' or 'sampled'");
      }
    }
    if (doc.contains("attacks")) {
      const auto attacks = field<std::vector<std::string>>(doc, "attacks");
      cfg.run_attack1 = cfg.run_attack2 = false;
      for (const auto& a : attacks) {
        if (a == "attack1") {
          cfg.run_attack1 = true;
        } else if (a == "attack2") {
          cfg.run_attack2 = true;
        } else {
          throw FormatError("unknown attack '" + a + "'");
        }
      }
    }
    if (doc.contains("attack1")) {
      const auto& aj = doc.at("attack1");
      reject_unknown_keys(aj, {"aux_size", "epochs", "learning_rate", "batch_size",
                               "weight_decay", "released_only"},
                          "attack1");
      read_optional(aj, "aux_size", cfg.aux_size);
      read_optional(aj, "epochs", cfg.attack1.epochs);
      read_optional(aj, "learning_rate", cfg.attack1.learning_rate);
      read_optional(aj, "batch_size", cfg.attack1.batch_size);
      read_optional(aj, "weight_decay", cfg.attack1.weight_decay);
      read_optional(aj, "released_only", cfg.attack1_released_only);
    }
    if (doc.contains("attack2")) {
      const auto& aj = doc.at("attack2");
      reject_unknown_keys(aj, {"queries", "min_candidates", "tau", "xi", "xi_fraction",
                               "per_feature_range"},
                          "attack2");
      read_optional(aj, "queries", cfg.queries);
      read_optional(aj, "min_candidates", cfg.attack2.min_candidates);
      read_optional(aj, "tau", cfg.attack2.tau);
      if (aj.contains("xi")) cfg.attack2.xi = field<double>(aj, "xi");
      read_optional(aj, "xi_fraction", cfg.attack2.xi_fraction);
      read_optional(aj, "per_feature_range", cfg.attack2.per_feature_range);
    }
    if (doc.contains("defense")) {
      const auto& dj = doc.at("defense");
      reject_unknown_keys(dj, {"quantize_levels", "quantize_range", "topk", "topk_indices"},
                          "defense");
      if (dj.contains("quantize_levels")) {
        cfg.defense.quantize_levels = field<int>(dj, "quantize_levels");
      }
      if (dj.contains("quantize_range")) {
        const auto r = field<std::vector<double>>(dj, "quantize_range");
        if (r.size() != 2) throw FormatError("defense.quantize_range needs [lo, hi]");
        cfg.defense.quantize_range = std::make_pair(r[0], r[1]);
      }
      if (dj.contains("topk")) cfg.defense.topk = field<std::size_t>(dj, "topk");
      if (dj.contains("topk_indices")) {
        cfg.defense.topk_indices = field<std::vector<std::size_t>>(dj, "topk_indices");
      }
    }
    read_optional(doc, "references", cfg.references);
    read_optional(doc, "val_size", cfg.val_size);
    read_optional(doc, "seeds", cfg.seeds);
    read_optional(doc, "budget", cfg.budget);
    if (doc.contains("sweep")) {
      const auto& sj = doc.at("sweep");
      reject_unknown_keys(sj, {"kind", "values"}, "sweep");
      cfg.sweep = sweep_kind_from_string(field<std::string>(sj, "kind"));
      read_optional(sj, "values", cfg.sweep_values);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
  return cfg;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json doc;
  doc["name"] = cfg.name;
  if (cfg.dataset.synthetic) {
    const auto& s = *cfg.dataset.synthetic;
    doc["dataset"] = {{"synthetic",
                       {{"n_features", s.n_features},
                        {"important_fraction", s.important_fraction},
                        {"n_samples", s.n_samples},
                        {"cluster_std", s.cluster_std}}}};
  } else {
    doc["dataset"] = {{"csv", cfg.dataset.csv.string()},
                      {"label_column", cfg.dataset.label_column}};
  }
  nlohmann::json model = cfg.model_hyperparameters;
  model["kind"] = to_string(cfg.model_kind);
  model["dropout"] = cfg.dropout_rate;
  doc["model"] = model;
  doc["explain"] = {{"method", cfg.method.type == ExplainMethodType::kExact ? "exact" : "sampled"}};
  if (cfg.method.type == ExplainMethodType::kSampled) doc["explain"]["nu"] = cfg.method.nu;
  doc["attacks"] = selected_attacks(cfg);
  doc["attack1"] = {{"aux_size", cfg.aux_size},
                    {"epochs", cfg.attack1.epochs},
                    {"learning_rate", cfg.attack1.learning_rate},
                    {"batch_size", cfg.attack1.batch_size},
                    {"weight_decay", cfg.attack1.weight_decay},
                    {"released_only", cfg.attack1_released_only}};
  doc["attack2"] = {{"queries", cfg.queries},
                    {"min_candidates", cfg.attack2.min_candidates},
                    {"tau", cfg.attack2.tau},
                    {"xi_fraction", cfg.attack2.xi_fraction},
                    {"per_feature_range", cfg.attack2.per_feature_range}};
  if (cfg.attack2.xi) doc["attack2"]["xi"] = *cfg.attack2.xi;
  nlohmann::json defense = nlohmann::json::object();
  if (cfg.defense.quantize_levels) defense["quantize_levels"] = *cfg.defense.quantize_levels;
  if (cfg.defense.quantize_range) {
    defense["quantize_range"] = {cfg.defense.quantize_range->first,
                                 cfg.defense.quantize_range->second};
  }
  if (cfg.defense.topk) defense["topk"] = *cfg.defense.topk;
  if (cfg.defense.topk_indices) defense["topk_indices"] = *cfg.defense.topk_indices;
  doc["defense"] = defense;
  doc["references"] = cfg.references;
  doc["val_size"] = cfg.val_size;
  doc["seeds"] = cfg.seeds;
  doc["budget"] = cfg.budget;
  doc["sweep"] = {{"kind", to_string(cfg.sweep)}, {"values", cfg.sweep_values}};
  return doc;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = experiment_config_from_json(internal::read_json_file(path));
  if (!cfg.dataset.synthetic && cfg.dataset.csv.is_relative()) {
    cfg.dataset.csv = path.parent_path() / cfg.dataset.csv;
  }
  return cfg;
}

// --- running -------------------------------------------------------------

Target build_target(const ExperimentConfig& cfg, std::uint64_t seed) {
  Target t;
  if (cfg.dataset.synthetic) {
    SynthConfig sc = *cfg.dataset.synthetic;
    sc.seed = derive_seed(seed, kDataStream);
    t.data = gen_synthetic(sc);
  } else {
    t.data = normalize_minmax(load_csv(cfg.dataset.csv, cfg.dataset.label_column)).first;
  }
  t.split = split(t.data, derive_seed(seed, kSplitStream));
  t.model = std::make_shared<const Model>(train_model(cfg.model_kind, t.split.train,
                                                      cfg.model_hyperparameters,
                                                      cfg.dropout_rate,
                                                      derive_seed(seed, kModelStream)));
  t.val_x = rows_of(t.split.val.features, std::min(cfg.val_size, t.split.val.rows()));
  const Matrix preds = predict_batch(*t.model, t.val_x);
  for (std::size_t c = 0; c < t.val_x.cols(); ++c) t.macc.push_back(macc(t.val_x.column(c), preds));
  const std::size_t n = t.val_x.cols();
  const std::size_t m = t.val_x.rows();
  t.baseline_rg_e = rg_e(t.split.aux.features, m, derive_seed(seed, kBaselineStream));
  t.baseline_rg_u = rg_u(n, m, derive_seed(seed, kBaselineStream + 1));
  t.baseline_rg_n = rg_n(n, m, derive_seed(seed, kBaselineStream + 2));
  return t;
}

ResultTable run_setting(const ExperimentConfig& cfg, const Target& target, std::uint64_t seed,
                        const std::string& setting, double setting_value) {
  const std::size_t n = target.val_x.cols();
  const std::size_t m = target.val_x.rows();
  const std::int64_t budget = cfg.budget > 0 ? cfg.budget : cfg.queries_needed();
  const double l1_rg_e = l1_loss(target.baseline_rg_e, target.val_x);
  const double l1_rg_u = l1_loss(target.baseline_rg_u, target.val_x);
  const double l1_rg_n = l1_loss(target.baseline_rg_n, target.val_x);

  Matrix truth1, guess1, truth2;
  std::vector<Reconstruction> recs;
  double time1 = 0.0, time2 = 0.0;
  std::string warning;
  // An attack-1 failure is reported on its own row so attack 2 still runs.
  std::string error1;

  for (std::size_t r = 0; r < cfg.references; ++r) {
    Rng ref_rng(derive_seed(seed, kReferenceStream + r));
    const std::size_t ref_row =
        std::uniform_int_distribution<std::size_t>(0, target.split.train.rows() - 1)(ref_rng);
    ServiceConfig svc;
    svc.method = cfg.method;
    svc.seed = derive_seed(seed, kServiceStream + r);
    const auto ref_values = target.split.train.features.row(ref_row);
    svc.reference.values.assign(ref_values.begin(), ref_values.end());
    svc.reference.source = static_cast<std::int64_t>(target.split.train_rows[ref_row]);
    svc.defense = cfg.defense;
    svc.budgets = {{"attack1", budget}, {"attack2", budget}};
    ExplanationService service(target.model, svc);

    const std::vector<bool> released = [&] {
      std::vector<bool> mask(n, !service.defense().topk);
      if (service.defense().topk) {
        for (std::size_t i : *service.defense().topk_indices) mask[i] = true;
      }
      return mask;
    }();

    if (cfg.run_attack1 && error1.empty()) {
      try {
        const auto start = std::chrono::steady_clock::now();
        LocalOracle oracle(service, "attack1");
        PairOptions popts;
        if (cfg.attack1_released_only && service.defense().topk) {
          auto idx = *service.defense().topk_indices;
          std::ranges::sort(idx);
          popts.input_indices = idx;
        }
        const PairSet pairs =
            build_pairs(rows_of(target.split.aux.features, cfg.aux_size), oracle, popts);
        if (pairs.partial) throw std::runtime_error(pairs.warning);
        InverseTrainOptions o = cfg.attack1;
        o.seed = derive_seed(seed, kInverseStream + r);
        const AttackModel psi = train_inverse(pairs, o);
        const BatchResult answers = batch_explain(oracle, target.val_x);
        if (!answers.complete) throw std::runtime_error(answers.error);
        for (std::size_t i = 0; i < m; ++i) {
          guess1.append_row(psi.reconstruct(attack_input(answers.results[i].explanation, popts)));
          truth1.append_row(target.val_x.row(i));
        }
        time1 += seconds_since(start);
      } catch (const std::exception& e) {
        error1 = e.what();
      }
    }

    if (cfg.run_attack2) {
      const auto start = std::chrono::steady_clock::now();
      LocalOracle oracle(service, "attack2");
      const std::size_t q = cfg.queries.front();
      const Matrix x_rand = gen_random_queries(n, q, derive_seed(seed, kQueryStream + r));
      const BatchResult rand_answers = batch_explain(oracle, x_rand);
      if (!rand_answers.complete) throw std::runtime_error(rand_answers.error);
      Matrix s_rand;
      for (const auto& a : rand_answers.results) s_rand.append_row(a.explanation.filled());
      const std::vector<double> xi = resolve_xi(cfg.attack2, s_rand);
      const BatchResult answers = batch_explain(oracle, target.val_x);
      if (!answers.complete) throw std::runtime_error(answers.error);
      for (std::size_t i = 0; i < m; ++i) {
        const auto s = answers.results[i].explanation.filled();
        Reconstruction rec = run_attack2(s, x_rand, s_rand, cfg.attack2, xi);
        for (std::size_t f = 0; f < n; ++f) {
          if (released[f]) continue;
          rec.values[f].reset();
          rec.ranges[f] = {0.0, 1.0};
          rec.counts[f] = 0;
        }
        recs.push_back(std::move(rec));
        truth2.append_row(target.val_x.row(i));
      }
      time2 += seconds_since(start);
    }
  }

  ResultTable rows;
  auto finish = [&](ResultRow row, double seconds) {
    row.rg_e = l1_rg_e;
    row.rg_u = l1_rg_u;
    row.rg_n = l1_rg_n;
    row.per_feature_macc = target.macc;
    row.wall_seconds = seconds;
    row.error = warning;
    rows.push_back(std::move(row));
  };
  if (cfg.run_attack1) {
    ResultRow row = blank_row(cfg, "attack1", seed, setting, setting_value);
    if (error1.empty()) {
      row.l1 = l1_loss(guess1, truth1);
      row.sr = 1.0;
      row.per_feature_l1 = per_feature_l1(guess1, truth1);
    }
    finish(std::move(row), time1);
    if (!error1.empty()) rows.back().error = error1;
  }
  if (cfg.run_attack2) {
    ResultRow row = blank_row(cfg, "attack2", seed, setting, setting_value);
    const ReconstructionError err = reconstruction_error(recs, truth2);
    row.l1 = err.l1;
    row.sr = success_rate(recs);
    row.per_feature_l1 = err.per_feature;
    finish(std::move(row), time2);
  }
  return rows;
}

std::vector<Setting> expand_settings(const ExperimentConfig& cfg) {
  std::vector<Setting> out;
  auto add = [&](std::string label, double value, ExperimentConfig c) {
    c.sweep = SweepKind::kNone;
    c.sweep_values.clear();
    out.push_back({std::move(label), value, std::move(c)});
  };
  switch (cfg.sweep) {
    case SweepKind::kNone:
      add("base", 0.0, cfg);
      break;
    case SweepKind::kQueries: {
      std::vector<double> values = cfg.sweep_values;
      if (values.empty()) values.assign(cfg.queries.begin(), cfg.queries.end());
      for (double v : values) {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw std::invalid_argument("query counts must be positive integers");
        }
        ExperimentConfig c = cfg;
        c.aux_size = static_cast<std::size_t>(v);
        c.queries = {static_cast<std::size_t>(v)};
        add("queries=" + format_setting_value(v), v, std::move(c));
      }
      break;
    }
    case SweepKind::kSamplingError:
      // Value f means a target sampling error of r/f; 0 selects exact values.
      for (double f : cfg.sweep_values) {
        if (f < 0.0) throw std::invalid_argument("sampling-error divisors must be >= 0");
        ExperimentConfig c = cfg;
        if (f == 0.0) {
          c.method = ExplainMethod::exact();
          add("epsilon=0", f, std::move(c));
        } else {
          c.method = ExplainMethod::sampled(
              static_cast<int>(permutations_needed(0.1, 1.0 / f, 1.0)));
          add("epsilon=r/" + format_setting_value(f), f, std::move(c));
        }
      }
      break;
    case SweepKind::kQuantize:
      for (double v : cfg.sweep_values) {
        if (!(v >= 2.0) || v != std::floor(v)) {
          throw std::invalid_argument("quantize levels must be integers >= 2");
        }
        ExperimentConfig c = cfg;
        c.defense.quantize_levels = static_cast<int>(v);
        add("quantize=" + format_setting_value(v), v, std::move(c));
      }
      break;
    case SweepKind::kDropout:
      for (double v : cfg.sweep_values) {
        ExperimentConfig c = cfg;
        c.dropout_rate = v;
        add("dropout=" + format_setting_value(v), v, std::move(c));
      }
      break;
    case SweepKind::kTopk:
      for (double v : cfg.sweep_values) {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw std::invalid_argument("topk values must be positive integers");
        }
        ExperimentConfig c = cfg;
        c.defense.topk = static_cast<std::size_t>(v);
        c.defense.topk_indices.reset();
        add("topk=" + format_setting_value(v), v, std::move(c));
      }
      break;
  }
  return out;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto settings = expand_settings(cfg);
  ResultTable table;
  for (std::uint64_t seed : cfg.seeds) {
    // Targets depend only on the dropout rate among the swept knobs.
    std::map<double, std::shared_ptr<Target>> targets;
    std::map<double, std::string> target_errors;
    for (const auto& s : settings) {
      const auto start = std::chrono::steady_clock::now();
      try {
        const double key = s.cfg.dropout_rate;
        if (target_errors.contains(key)) throw std::runtime_error(target_errors[key]);
        if (!targets.contains(key)) {
          try {
            targets[key] = std::make_shared<Target>(build_target(s.cfg, seed));
          } catch (const std::exception& e) {
            target_errors[key] = std::string("target: ") + e.what();
            throw std::runtime_error(target_errors[key]);
          }
        }
        for (auto& row : run_setting(s.cfg, *targets[key], seed, s.label, s.value)) {
          table.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        for (const auto& attack : selected_attacks(s.cfg)) {
          ResultRow row = blank_row(s.cfg, attack, seed, s.label, s.value);
          row.error = e.what();
          row.wall_seconds = seconds_since(start);
          table.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

ResultRow rerun(const ExperimentConfig& cfg, const ResultRow& row) {
  for (const auto& s : expand_settings(cfg)) {
    if (s.label != row.setting) continue;
    const Target target = build_target(s.cfg, row.seed);
    for (auto& r : run_setting(s.cfg, target, row.seed, s.label, s.value)) {
      if (r.attack == row.attack) return r;
    }
  }
  throw std::invalid_argument("no setting '" + row.setting + "' for attack '" + row.attack +
                              "' in this config");
}

// --- output --------------------------------------------------------------

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> columns = {
      "experiment_id", "setting", "setting_value", "model", "attack",
      "seed", "l1", "sr", "rg_e", "rg_u",
      "rg_n", "wall_seconds", "per_feature_l1", "per_feature_macc", "error"};
  return columns;
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : table) {
    out << csv_escape(r.experiment_id) << ',' << csv_escape(r.setting) << ','
        << format_double(r.setting_value) << ',' << csv_escape(r.model) << ','
        << csv_escape(r.attack) << ',' << r.seed << ',' << format_double(r.l1) << ','
        << format_double(r.sr) << ',' << format_double(r.rg_e) << ','
        << format_double(r.rg_u) << ',' << format_double(r.rg_n) << ','
        << format_double(r.wall_seconds) << ',' << join_vector(r.per_feature_l1) << ','
        << join_vector(r.per_feature_macc) << ',' << csv_escape(r.error) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ResultTable parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (internal::split_csv_line(line) != result_columns()) {
    throw FormatError(path.string() + ": unexpected header");
  }
  ResultTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = internal::split_csv_line(line);
    if (c.size() != result_columns().size()) {
      throw FormatError(path.string() + ": row has " + std::to_string(c.size()) + " cells");
    }
    ResultRow r;
    r.experiment_id = c[0];
    r.setting = c[1];
    r.setting_value = parse_double_cell(c[2]);
    r.model = c[3];
    r.attack = c[4];
    try {
      r.seed = std::stoull(c[5]);
    } catch (const std::exception&) {
      throw FormatError("bad seed cell '" + c[5] + "'");
    }
    r.l1 = parse_double_cell(c[6]);
    r.sr = parse_double_cell(c[7]);
    r.rg_e = parse_double_cell(c[8]);
    r.rg_u = parse_double_cell(c[9]);
    r.rg_n = parse_double_cell(c[10]);
    r.wall_seconds = parse_double_cell(c[11]);
    r.per_feature_l1 = split_vector(c[12]);
    r.per_feature_macc = split_vector(c[13]);
    r.error = c[14];
    table.push_back(std::move(r));
  }
  return table;
}

void emit_plotdata(const ResultTable& table, const std::filesystem::path& path) {
  struct Acc {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, Acc> acc;
  auto add = [&](const std::string& series, double x, double y) {
    if (!std::isfinite(y)) return;
    const auto key = std::make_pair(series, x);
    if (!acc.contains(key)) order.push_back(key);
    acc[key].sum += y;
    ++acc[key].count;
  };
  for (const auto& r : table) {
    if (!r.error.empty()) continue;
    const std::string prefix = r.model + "/" + r.attack + "/";
    add(prefix + "l1", r.setting_value, r.l1);
    add(prefix + "sr", r.setting_value, r.sr);
    add(r.model + "/rg_e/l1", r.setting_value, r.rg_e);
    add(r.model + "/rg_u/l1", r.setting_value, r.rg_u);
    add(r.model + "/rg_n/l1", r.setting_value, r.rg_n);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,y,series\n";
  for (const auto& key : order) {
    const Acc& a = acc[key];
    out << format_double(key.second) << ',' << format_double(a.sum / a.count) << ','
        << csv_escape(key.first) << '\n';
  }
}

std::vector<SummaryRow> summarize(const ResultTable& table) {
  std::vector<SummaryRow> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  std::vector<std::vector<const ResultRow*>> groups;
  for (const auto& r : table) {
    const auto key = std::make_tuple(r.setting, r.model, r.attack);
    if (!index.contains(key)) {
      index[key] = out.size();
      out.push_back({r.setting, r.model, r.attack});
      groups.emplace_back();
    }
    groups[index[key]].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> l1, sr, e, u, nn;
    for (const ResultRow* r : groups[g]) {
      if (!r->error.empty()) {
        ++out[g].failures;
        continue;
      }
      ++out[g].seeds;
      if (std::isfinite(r->l1)) l1.push_back(r->l1);
      if (std::isfinite(r->sr)) sr.push_back(r->sr);
      e.push_back(r->rg_e);
      u.push_back(r->rg_u);
      nn.push_back(r->rg_n);
    }
    out[g].l1_mean = mean_of(l1);
    out[g].l1_sd = l1.size() > 1 ? std::sqrt(sample_variance(l1)) : 0.0;
    out[g].sr_mean = mean_of(sr);
    out[g].sr_sd = sr.size() > 1 ? std::sqrt(sample_variance(sr)) : 0.0;
    out[g].rg_e = mean_of(e);
    out[g].rg_u = mean_of(u);
    out[g].rg_n = mean_of(nn);
  }
  return out;
}

}  // namespace shapleak
