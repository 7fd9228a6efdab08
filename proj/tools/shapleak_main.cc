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

// Command-line front end for the shapleak library.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "shapleak/attack1.h"
#include "shapleak/attack2.h"
#include "shapleak/dataset.h"
#include "shapleak/defense.h"
#include "shapleak/experiment.h"
#include "shapleak/explain.h"
#include "shapleak/metrics.h"
#include "shapleak/models.h"
#include "shapleak/service.h"
#include "shapleak/synth.h"

namespace shapleak {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
auto as_config(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

bool is_csv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

Dataset read_data(const std::string& path, const std::string& label) {
  if (is_csv(path)) return normalize_minmax(load_csv(path, label)).first;
  return load_dataset(path);
}

Matrix head_rows(const Matrix& m, std::size_t count) {
  std::vector<std::size_t> rows(std::min(count, m.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return m.select_rows(rows);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

// --- gen-synth -----------------------------------------------------------

struct GenSynthArgs {
  SynthConfig cfg;
  std::string out;
  std::string csv_out;
};

int run_gen_synth(const GenSynthArgs& a) {
  as_config("synthetic config", [&] {
    a.cfg.validate();
    return 0;
  });
  const Dataset d = gen_synthetic(a.cfg);
  save_dataset(d, std::nullopt, a.out);
  if (!a.csv_out.empty()) {
    std::ofstream csv(a.csv_out);
    if (!csv) throw std::runtime_error("cannot write " + a.csv_out);
    for (const auto& name : d.feature_names) csv << name << ',';
    csv << "label\n";
    csv.precision(17);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      for (double v : d.features.row(r)) csv << v << ',';
      csv << d.labels[r] << '\n';
    }
  }
  std::cout << "wrote " << d.rows() << " rows x " << d.cols() << " features to " << a.out
            << '\n';
  return kExitOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string label = "label";
  std::string kind = "mlp";
  double dropout = 0.0;
  std::uint64_t seed = 0;
  std::string hyper = "{}";
  std::string out;
  std::string aux_out;
  std::string val_out;
  std::string train_out;
};

int run_train(const TrainArgs& a) {
  const ModelKind kind = as_config("--kind", [&] { return model_kind_from_string(a.kind); });
  const nlohmann::json hyper = as_config("--hyper", [&] { return nlohmann::json::parse(a.hyper); });
  const Dataset d = read_data(a.data, a.label);
  const Split s = split(d, a.seed);
  const Model model = as_config("model options", [&] {
    return train_model(kind, s.train, hyper, a.dropout, a.seed);
  });
  save_model(model, a.out);
  if (!a.train_out.empty()) save_dataset(s.train, std::nullopt, a.train_out);
  if (!a.aux_out.empty()) save_dataset(s.aux, std::nullopt, a.aux_out);
  if (!a.val_out.empty()) save_dataset(s.val, std::nullopt, a.val_out);
  std::printf("kind=%s train_accuracy=%.4f val_accuracy=%.4f\n", a.kind.c_str(),
              accuracy(model, s.train), accuracy(model, s.val));
  return kExitOk;
}

// --- explain -------------------------------------------------------------

struct ExplainArgs {
  std::string model;
  std::string data;
  std::string label = "label";
  std::size_t rows = 0;
  std::string reference_data;
  std::size_t reference_row = 0;
  std::string method = "sampled";
  int nu = 50;
  std::uint64_t seed = 0;
  std::string target_class = "top";
  std::string out;
};

int run_explain(const ExplainArgs& a) {
  const ExplainMethod method = as_config("--method", [&] {
    if (a.method == "exact") return ExplainMethod::exact();
    if (a.method == "sampled") return ExplainMethod::sampled(a.nu);
    throw std::invalid_argument("expected exact or sampled");
  });
  const Model model = load_model(a.model);
  const Dataset d = read_data(a.data, a.label);
  const Dataset ref_data = a.reference_data.empty() ? d : read_data(a.reference_data, a.label);
  if (a.reference_row >= ref_data.rows()) throw ConfigError("--reference-row out of range");
  std::optional<std::size_t> fixed;
  if (a.target_class != "top") {
    fixed = as_config("--class", [&] { return static_cast<std::size_t>(std::stoul(a.target_class)); });
  }
  ReferenceSample ref;
  const auto rv = ref_data.features.row(a.reference_row);
  ref.values.assign(rv.begin(), rv.end());
  ref.source = static_cast<std::int64_t>(a.reference_row);
  const std::size_t count = a.rows == 0 ? d.rows() : std::min(a.rows, d.rows());
  std::vector<Explanation> out;
  for (std::size_t r = 0; r < count; ++r) {
    const auto x = d.features.row(r);
    std::size_t target = 0;
    if (fixed) {
      target = *fixed;
    } else {
      const auto p = model.predict(x);
      target = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    out.push_back(explain(model, x, ref, target, method, derive_seed(a.seed, r)));
  }
  save_explanations(out, a.out);
  std::cout << "wrote " << out.size() << " explanations to " << a.out << '\n';
  return kExitOk;
}

// --- serve ---------------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string listen;
  std::string model;
};

int run_serve(const ServeArgs& a) {
  ServiceConfig cfg = as_config("--config", [&] { return load_service_config(a.config); });
  if (!a.listen.empty()) cfg.listen = a.listen;
  if (!a.model.empty()) cfg.model_path = a.model;
  const auto [host, port] = as_config("listen address", [&] { return parse_endpoint(cfg.listen); });
  auto model = std::make_shared<const Model>(load_model(cfg.model_path));
  ExplanationService service(model, cfg);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  TcpServer server(service, host, port);
  server.start();
  std::cout << "listening on " << host << ':' << server.port() << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  for (const auto& [key, _] : cfg.budgets) {
    std::cout << "key " << key << ": used " << service.used(key) << ", remaining "
              << service.remaining(key) << '\n';
  }
  return kExitOk;
}

// --- oracle selection shared by the attacks -------------------------------

struct OracleArgs {
  std::string endpoint;
  std::string service_config;
  std::string key;
};

// Owns whatever backs the oracle: an in-process service or a TCP client.
struct OracleHandle {
  std::unique_ptr<ExplanationService> service;
  std::unique_ptr<ServiceClient> client;
  std::unique_ptr<ExplanationOracle> oracle;
};

OracleHandle open_oracle(const OracleArgs& a) {
  if (a.endpoint.empty() == a.service_config.empty()) {
    throw ConfigError("give exactly one of --endpoint or --service-config");
  }
  OracleHandle h;
  if (!a.endpoint.empty()) {
    const auto [host, port] = as_config("--endpoint", [&] { return parse_endpoint(a.endpoint); });
    h.client = std::make_unique<ServiceClient>(host, port);
    h.oracle = std::make_unique<RemoteOracle>(*h.client, a.key);
  } else {
    ServiceConfig cfg = as_config("--service-config", [&] { return load_service_config(a.service_config); });
    auto model = std::make_shared<const Model>(load_model(cfg.model_path));
    h.service = std::make_unique<ExplanationService>(model, cfg);
    h.oracle = std::make_unique<LocalOracle>(*h.service, a.key);
  }
  return h;
}

// --- attack1 -------------------------------------------------------------

struct Attack1Args {
  OracleArgs oracle;
  std::string aux;
  std::size_t aux_size = 0;
  std::string targets;
  std::size_t target_rows = 0;
  InverseTrainOptions train;
  double fill = 0.0;
  std::string model_out;
  std::string out;
};

int run_attack1(const Attack1Args& a) {
  OracleHandle h = open_oracle(a.oracle);
  const Dataset aux = load_dataset(a.aux);
  const Dataset targets = load_dataset(a.targets);
  const Matrix aux_x = head_rows(aux.features, a.aux_size == 0 ? aux.rows() : a.aux_size);
  const Matrix target_x =
      head_rows(targets.features, a.target_rows == 0 ? targets.rows() : a.target_rows);
  PairOptions popts;
  popts.fill = a.fill;
  const PairSet pairs = build_pairs(aux_x, *h.oracle, popts);
  if (pairs.partial) std::cerr << "warning: " << pairs.warning << '\n';
  std::cout << "pairs=" << pairs.size() << " collisions_removed=" << pairs.collisions_removed
            << '\n';
  const AttackModel psi = train_inverse(pairs, a.train);
  if (!a.model_out.empty()) save_attack_model(psi, a.model_out);
  const BatchResult answers = batch_explain(*h.oracle, target_x);
  if (!answers.complete) std::cerr << "warning: targets stopped early: " << answers.error << '\n';
  if (answers.results.empty()) throw std::runtime_error("no target explanations obtained");
  Matrix guess, truth;
  std::vector<Reconstruction> recs;
  for (std::size_t i = 0; i < answers.results.size(); ++i) {
    const auto xhat = psi.reconstruct(attack_input(answers.results[i].explanation, popts));
    guess.append_row(xhat);
    truth.append_row(target_x.row(i));
    Reconstruction r;
    for (double v : xhat) {
      r.values.emplace_back(v);
      r.ranges.emplace_back(v, v);
      r.counts.push_back(1);
    }
    recs.push_back(std::move(r));
  }
  if (!a.out.empty()) save_reconstructions(recs, a.out);
  const double baseline = l1_loss(rg_e(aux.features, guess.rows(), a.train.seed), truth);
  std::printf("l1=%.4f rg_e=%.4f final_train_loss=%.6f\n", l1_loss(guess, truth), baseline,
              psi.loss_history().empty() ? 0.0 : psi.loss_history().back());
  return kExitOk;
}

// --- attack2 -------------------------------------------------------------

struct Attack2Args {
  OracleArgs oracle;
  std::string targets;
  std::size_t target_rows = 0;
  Attack2Config cfg;
  std::optional<double> xi;
  std::string out;
};

int run_attack2(const Attack2Args& a) {
  Attack2Config cfg = a.cfg;
  cfg.xi = a.xi;
  as_config("attack2 options", [&] {
    cfg.validate();
    if (cfg.queries < cfg.min_candidates) throw std::invalid_argument("--queries below --min-candidates");
    return 0;
  });
  OracleHandle h = open_oracle(a.oracle);
  const Dataset targets = load_dataset(a.targets);
  const Matrix target_x =
      head_rows(targets.features, a.target_rows == 0 ? targets.rows() : a.target_rows);
  const Matrix x_rand = gen_random_queries(target_x.cols(), cfg.queries, cfg.seed);
  const BatchResult rand_answers = batch_explain(*h.oracle, x_rand);
  if (!rand_answers.complete) {
    throw std::runtime_error("random queries incomplete: " + rand_answers.error);
  }
  Matrix s_rand;
  for (const auto& q : rand_answers.results) s_rand.append_row(q.explanation.filled());
  const auto xi = resolve_xi(cfg, s_rand);
  const BatchResult answers = batch_explain(*h.oracle, target_x);
  if (!answers.complete) std::cerr << "warning: targets stopped early: " << answers.error << '\n';
  if (answers.results.empty()) throw std::runtime_error("no target explanations obtained");
  std::vector<Reconstruction> recs;
  Matrix truth;
  for (std::size_t i = 0; i < answers.results.size(); ++i) {
    recs.push_back(shapleak::run_attack2(answers.results[i].explanation.filled(), x_rand, s_rand,
                                         cfg, xi));
    truth.append_row(target_x.row(i));
  }
  if (!a.out.empty()) save_reconstructions(recs, a.out);
  const ReconstructionError err = reconstruction_error(recs, truth);
  std::printf("sr=%.4f l1_recovered=%.4f recovered_cells=%zu xi=%.6g\n", success_rate(recs),
              err.l1, err.recovered, xi.front());
  return kExitOk;
}

// --- bound ---------------------------------------------------------------

struct BoundArgs {
  double u = 2.0;
  double w = 0.1;
  std::size_t k = 30;
  double a = 0.0;
  double b = 0.1;
};

int run_bound(const BoundArgs& a) {
  const BoundReport r = as_config("bound parameters", [&] { return error_bound(a.u, a.w, a.k, a.a, a.b); });
  const nlohmann::json j = {{"u", r.u},         {"w", r.w},
                            {"k", r.k},         {"a", r.a},
                            {"b", r.b},         {"error_radius", r.error_radius},
                            {"confidence", r.confidence}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

// --- defend --------------------------------------------------------------

struct DefendArgs {
  std::string in;
  std::optional<int> levels;
  std::vector<double> range;
  std::optional<std::size_t> topk;
  std::string out;
};

int run_defend(const DefendArgs& a) {
  if (!a.levels && !a.topk) throw ConfigError("give --quantize-levels and/or --topk");
  if (!a.range.empty() && a.range.size() != 2) throw ConfigError("--range takes lo,hi");
  std::vector<Explanation> es = load_explanations(a.in);
  if (es.empty()) throw std::runtime_error(a.in + " holds no explanations");
  if (a.levels) {
    double lo = 0.0, hi = 0.0;
    if (a.range.empty()) {
      lo = hi = es.front().shapley.front();
      for (const auto& e : es) {
        for (double v : e.shapley) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      if (!(lo < hi)) hi = lo + 1.0;
    } else {
      lo = a.range[0];
      hi = a.range[1];
    }
    as_config("quantization", [&] {
      for (auto& e : es) e = quantize(e, *a.levels, lo, hi);
      return 0;
    });
  }
  std::vector<PartialExplanation> released;
  if (a.topk) {
    auto ranking = rank_by_shapley_variance(es);
    if (*a.topk > ranking.size()) throw ConfigError("--topk exceeds feature count");
    ranking.resize(*a.topk);
    for (const auto& e : es) released.push_back(apply_topk(e, ranking));
  } else {
    for (const auto& e : es) released.push_back(release_all(e));
  }
  nlohmann::json doc = {{"format", "shapleak-released"}, {"version", 1}};
  doc["explanations"] = nlohmann::json::array();
  for (const auto& p : released) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : p.values) values.push_back(v ? nlohmann::json(*v) : nlohmann::json());
    doc["explanations"].push_back({{"shapley", values},
                                   {"target_class", p.target_class},
                                   {"reference_id", p.reference_id}});
  }
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << doc.dump(1) << '\n';
  std::cout << "wrote " << released.size() << " released explanations to " << a.out << '\n';
  return kExitOk;
}

// --- experiment / report -------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::string seeds;
  std::optional<std::size_t> references;
  std::optional<std::size_t> val_size;
  std::string out = "results.csv";
  std::string plotdata;
};

void print_summary(const ResultTable& table) {
  std::printf("%-18s %-6s %-8s %5s %16s %16s %8s %8s %8s %5s\n", "setting", "model", "attack",
              "seeds", "l1 (mean+-sd)", "sr (mean+-sd)", "rg_e", "rg_u", "rg_n", "fail");
  for (const auto& s : summarize(table)) {
    std::printf("%-18s %-6s %-8s %5zu %8.4f+-%6.4f %8.4f+-%6.4f %8.4f %8.4f %8.4f %5zu\n",
                s.setting.c_str(), s.model.c_str(), s.attack.c_str(), s.seeds, s.l1_mean, s.l1_sd,
                s.sr_mean, s.sr_sd, s.rg_e, s.rg_u, s.rg_n, s.failures);
  }
}

int run_experiment_cmd(const ExperimentArgs& a) {
  ExperimentConfig cfg = as_config("--config", [&] { return load_experiment_config(a.config); });
  if (!a.seeds.empty()) cfg.seeds = parse_seed_list(a.seeds);
  if (a.references) cfg.references = *a.references;
  if (a.val_size) cfg.val_size = *a.val_size;
  as_config("experiment config", [&] {
    cfg.validate();
    return 0;
  });
  const ResultTable table = run_experiment(cfg);
  emit_csv(table, a.out);
  if (!a.plotdata.empty()) emit_plotdata(table, a.plotdata);
  print_summary(table);
  const bool any_failed =
      std::any_of(table.begin(), table.end(), [](const ResultRow& r) { return !r.error.empty(); });
  for (const auto& r : table) {
    if (!r.error.empty()) std::cerr << "row " << r.setting << " seed " << r.seed << ": " << r.error << '\n';
  }
  return any_failed ? kExitRuntime : kExitOk;
}

struct ReportArgs {
  std::string results;
  std::string plotdata;
};

int run_report(const ReportArgs& a) {
  const ResultTable table = parse_csv(a.results);
  print_summary(table);
  if (!a.plotdata.empty()) emit_plotdata(table, a.plotdata);
  return kExitOk;
}

void add_oracle_options(CLI::App* cmd, OracleArgs& o) {
  cmd->add_option("--endpoint", o.endpoint, "Running service as host:port");
  cmd->add_option("--service-config", o.service_config, "Serve in-process from this config");
  cmd->add_option("--key", o.key, "API key")->required();
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Feature-inference attacks on Shapley-value explanations"};
  app.require_subcommand(1);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate the clustered synthetic dataset");
  gen_cmd->add_option("--out", gen.out, "Output dataset file")->required();
  gen_cmd->add_option("--csv", gen.csv_out, "Also write a CSV copy");
  gen_cmd->add_option("--n-features", gen.cfg.n_features);
  gen_cmd->add_option("--important-fraction", gen.cfg.important_fraction);
  gen_cmd->add_option("--samples", gen.cfg.n_samples);
  gen_cmd->add_option("--cluster-std", gen.cfg.cluster_std);
  gen_cmd->add_option("--seed", gen.cfg.seed);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a target model on the train split");
  train_cmd->add_option("--data", train.data, "Dataset file (.json) or CSV")->required();
  train_cmd->add_option("--label", train.label, "Label column for CSV input");
  train_cmd->add_option("--kind", train.kind, "mlp, rf, gbdt or ksvm");
  train_cmd->add_option("--dropout", train.dropout);
  train_cmd->add_option("--seed", train.seed, "Split and training seed");
  train_cmd->add_option("--hyper", train.hyper, "Hyper-parameters as a JSON object");
  train_cmd->add_option("--out", train.out, "Output model file")->required();
  train_cmd->add_option("--train-out", train.train_out, "Write the train split");
  train_cmd->add_option("--aux-out", train.aux_out, "Write the auxiliary split");
  train_cmd->add_option("--val-out", train.val_out, "Write the validation split");

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "Compute Shapley explanations");
  explain_cmd->add_option("--model", ex.model)->required();
  explain_cmd->add_option("--data", ex.data)->required();
  explain_cmd->add_option("--label", ex.label);
  explain_cmd->add_option("--rows", ex.rows, "Explain the first N rows (0 = all)");
  explain_cmd->add_option("--reference-data", ex.reference_data);
  explain_cmd->add_option("--reference-row", ex.reference_row);
  explain_cmd->add_option("--method", ex.method, "exact or sampled");
  explain_cmd->add_option("--nu", ex.nu, "Permutations for sampled explanations");
  explain_cmd->add_option("--seed", ex.seed);
  explain_cmd->add_option("--class", ex.target_class, "Class index or 'top'");
  explain_cmd->add_option("--out", ex.out)->required();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the explanation service");
  serve_cmd->add_option("--config", serve.config, "Service config file")->required();
  serve_cmd->add_option("--listen", serve.listen, "Override host:port");
  serve_cmd->add_option("--model", serve.model, "Override the model path");

  Attack1Args a1;
  auto* a1_cmd = app.add_subcommand("attack1", "Inverse-model attack with auxiliary data");
  add_oracle_options(a1_cmd, a1.oracle);
  a1_cmd->add_option("--aux", a1.aux, "Auxiliary dataset file")->required();
  a1_cmd->add_option("--aux-size", a1.aux_size, "Use the first N auxiliary rows (0 = all)");
  a1_cmd->add_option("--targets", a1.targets, "Dataset whose rows are attacked")->required();
  a1_cmd->add_option("--target-rows", a1.target_rows);
  a1_cmd->add_option("--epochs", a1.train.epochs);
  a1_cmd->add_option("--lr", a1.train.learning_rate);
  a1_cmd->add_option("--batch-size", a1.train.batch_size);
  a1_cmd->add_option("--weight-decay", a1.train.weight_decay);
  a1_cmd->add_option("--seed", a1.train.seed);
  a1_cmd->add_option("--fill", a1.fill, "Value for withheld Shapley entries");
  a1_cmd->add_option("--model-out", a1.model_out);
  a1_cmd->add_option("--out", a1.out, "Reconstructions file");

  Attack2Args a2;
  auto* a2_cmd = app.add_subcommand("attack2", "Random-query interpolation attack");
  add_oracle_options(a2_cmd, a2.oracle);
  a2_cmd->add_option("--targets", a2.targets)->required();
  a2_cmd->add_option("--target-rows", a2.target_rows);
  a2_cmd->add_option("--queries", a2.cfg.queries);
  a2_cmd->add_option("--min-candidates", a2.cfg.min_candidates);
  a2_cmd->add_option("--tau", a2.cfg.tau);
  a2_cmd->add_option("--xi", a2.xi, "Absolute distance threshold");
  a2_cmd->add_option("--xi-fraction", a2.cfg.xi_fraction, "Threshold as a fraction of r");
  a2_cmd->add_flag("--per-feature-range", a2.cfg.per_feature_range);
  a2_cmd->add_option("--seed", a2.cfg.seed);
  a2_cmd->add_option("--out", a2.out);

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "Error radius and confidence of attack 2");
  bound_cmd->add_option("--u", bound.u);
  bound_cmd->add_option("--w", bound.w);
  bound_cmd->add_option("--k", bound.k);
  bound_cmd->add_option("--a", bound.a);
  bound_cmd->add_option("--b", bound.b);

  DefendArgs defend;
  auto* defend_cmd = app.add_subcommand("defend", "Apply release defenses to explanations");
  defend_cmd->add_option("--in", defend.in)->required();
  defend_cmd->add_option("--quantize-levels", defend.levels);
  defend_cmd->add_option("--range", defend.range, "Quantization grid lo,hi")->delimiter(',');
  defend_cmd->add_option("--topk", defend.topk);
  defend_cmd->add_option("--out", defend.out)->required();

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a configured experiment");
  exp_cmd->add_option("--config", exp.config)->required();
  exp_cmd->add_option("--seeds", exp.seeds, "Comma-separated seed list");
  exp_cmd->add_option("--references", exp.references);
  exp_cmd->add_option("--val-size", exp.val_size);
  exp_cmd->add_option("--out", exp.out, "Results CSV");
  exp_cmd->add_option("--plotdata", exp.plotdata, "Plot-data CSV");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summarize a results CSV");
  report_cmd->add_option("--results", report.results)->required();
  report_cmd->add_option("--plotdata", report.plotdata);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*gen_cmd) return run_gen_synth(gen);
  if (*train_cmd) return run_train(train);
  if (*explain_cmd) return run_explain(ex);
  if (*serve_cmd) return run_serve(serve);
  if (*a1_cmd) return run_attack1(a1);
  if (*a2_cmd) return run_attack2(a2);
  if (*bound_cmd) return run_bound(bound);
  if (*defend_cmd) return run_defend(defend);
  if (*exp_cmd) return run_experiment_cmd(exp);
  if (*report_cmd) return run_report(report);
  return kExitConfig;
}

}  // namespace
}  // namespace shapleak

int main(int argc, char** argv) {
  try {
    return shapleak::dispatch(argc, argv);
  } catch (const shapleak::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return shapleak::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return shapleak::kExitRuntime;
  }
}
