// Copyright 2026 The cohdet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cohdet: coherence-graph machine-generated text detection toolkit.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohdet/coherence_graph.hpp"
#include "cohdet/config.hpp"
#include "cohdet/corpus.hpp"
#include "cohdet/encoder.hpp"
#include "cohdet/eval.hpp"
#include "cohdet/graph_stats.hpp"
#include "cohdet/parallel.hpp"
#include "cohdet/random.hpp"
#include "cohdet/trainer.hpp"

namespace {

using namespace cohdet;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kUsage = 2;

// Raised for bad inputs that are not tied to a library error type.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string corpus;
  std::string config;
  std::string out;
  std::string checkpoint;
  std::string dump;
  std::string signs;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t max_nodes = 90;
  std::size_t max_sentences = 45;
  bool uncapped = false;
  std::string perturb_kind;
  double perturb_scale = 0.15;
  std::size_t sample = 0;
  bool fixed_class = false;
  double holdout = 0.2;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("--out: cannot open " + path + " for writing");
  return out;
}

GraphLimits limits_of(const Options& o) {
  if (o.uncapped) return GraphLimits::uncapped();
  if (o.max_nodes == 0 || o.max_sentences == 0) {
    throw InputError("--max-nodes and --max-sentences must be >= 1");
  }
  return {o.max_nodes, o.max_sentences};
}

std::vector<Document> read_corpus(const Options& o) {
  auto docs = load_corpus(o.corpus);
  if (docs.empty()) throw InputError("--corpus: " + o.corpus + " holds no documents");
  return docs;
}

int cmd_ingest(const Options& o) {
  auto docs = read_corpus(o);
  if (o.sample > 0) docs = sample_low_resource(docs, o.sample, o.seed).train;
  auto out = open_out(o.out);
  write_corpus(out, docs);
  std::cout << "ingest: " << docs.size() << " documents (" << count_label(docs, Label::HWT)
            << " human, " << count_label(docs, Label::MGT) << " machine) -> " << o.out << '\n';
  return kOk;
}

std::vector<CoherenceGraph> build_graphs(const std::vector<Document>& docs, const Options& o) {
  const GraphLimits limits = limits_of(o);
  std::vector<CoherenceGraph> graphs(docs.size());
  parallel_for(docs.size(), o.threads, [&](std::size_t i) { graphs[i] = build_graph(docs[i], limits); });
  return graphs;
}

int cmd_graph(const Options& o) {
  const auto docs = read_corpus(o);
  const auto graphs = build_graphs(docs, o);
  auto out = open_out(o.out);
  std::size_t edges = 0;
  for (const auto& g : graphs) {
    out << graph_record(g) << '\n';
    edges += g.edges.size();
  }
  std::cout << "graph: " << graphs.size() << " graphs, " << edges << " edges -> " << o.out << '\n';
  return kOk;
}

int cmd_stats(const Options& o) {
  const auto docs = read_corpus(o);
  const auto graphs = build_graphs(docs, o);
  std::vector<Adjacency> hwt, mgt;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    (docs[i].label == Label::HWT ? hwt : mgt).push_back(merged_adjacency(graphs[i]));
  }
  const auto report = corpus_report(hwt, mgt, o.threads);
  auto out = open_out(o.out);
  out << report_json(report).dump(2) << '\n';
  if (!o.dump.empty()) {
    std::ofstream dump(o.dump, std::ios::binary);
    if (!dump) throw InputError("--dump: cannot open " + o.dump + " for writing");
    write_distribution_dump(dump, report);
  }
  std::printf("stats: human avg_degree %.4f, machine avg_degree %.4f, jsd_degree %.6f\n",
              report.hwt.avg_degree, report.mgt.avg_degree, report.jsd_degree);
  return kOk;
}

// Stratified holdout: ceil(fraction * n_c) documents of each class with at
// least two members.
std::pair<std::vector<Document>, std::vector<Document>> holdout_split(
    const std::vector<Document>& docs, double fraction, std::uint64_t seed) {
  Rng rng = make_rng(mix_seed(seed, 0x5eed));
  std::vector<bool> in_val(docs.size(), false);
  for (Label label : {Label::HWT, Label::MGT}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (docs[i].label == label) idx.push_back(i);
    }
    if (idx.size() < 2) continue;
    shuffle(idx, rng);
    const auto take = std::min(idx.size() - 1,
                               static_cast<std::size_t>(std::ceil(fraction * idx.size())));
    for (std::size_t k = 0; k < take; ++k) in_val[idx[k]] = true;
  }
  std::vector<Document> train, val;
  for (std::size_t i = 0; i < docs.size(); ++i) (in_val[i] ? val : train).push_back(docs[i]);
  return {train, val};
}

int cmd_train(const Options& o, const CLI::App& sub) {
  TrainConfig config = o.config.empty() ? TrainConfig{} : load_config(o.config);
  if (sub.count("--seed") > 0 || o.config.empty()) config.seed = o.seed;
  if (sub.count("--max-nodes") > 0) config.encoder.limits.max_nodes = o.max_nodes;
  if (sub.count("--max-sentences") > 0) config.encoder.limits.max_sentences = o.max_sentences;
  if (o.uncapped) config.encoder.limits = GraphLimits::uncapped();
  config.encoder.seed = config.seed;
  config.validate();

  const auto docs = read_corpus(o);
  auto [train_docs, val_docs] = holdout_split(docs, o.holdout, config.seed);
  auto log = open_out(o.out);
  TrainOptions options;
  options.hooks.after_epoch = [&](const EpochMetrics& m) {
    log << metrics_json(m).dump() << '\n';
    std::printf("epoch %zu  loss %.6f  icl %.6f  ce %.6f  val_loss %.6f  val_acc %.4f  val_f1 %.4f\n",
                m.epoch, m.train_loss, m.train_icl, m.train_ce, m.val_loss, m.val_accuracy, m.val_f1);
  };
  const auto result = train(train_docs, val_docs, config, options);

  Checkpoint ck;
  store_config(ck, config.encoder);
  ck.meta["best_epoch"] = std::to_string(result.best_epoch);
  ck.encoder = result.encoder;
  ck.classifier = result.classifier;
  std::ofstream out(o.checkpoint, std::ios::binary);
  if (!out) throw InputError("--checkpoint: cannot open " + o.checkpoint + " for writing");
  save_checkpoint(out, ck);
  std::cout << "train: best epoch " << result.best_epoch << " of " << result.log.size()
            << ", checkpoint -> " << o.checkpoint << '\n';
  return kOk;
}

nlohmann::ordered_json eval_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  return j;
}

EvalReport score(const std::vector<Document>& docs, const Checkpoint& ck,
                 const EncoderConfig& config, std::size_t threads) {
  const auto inputs = prepare_inputs(docs, config, threads);
  std::vector<Label> preds(docs.size()), labels(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    const double p = predict_probability(inputs[i], ck.encoder, ck.classifier, config);
    preds[i] = p >= 0.5 ? Label::MGT : Label::HWT;
    labels[i] = docs[i].label;
  });
  return evaluate(preds, labels);
}

int cmd_eval(const Options& o) {
  std::ifstream in(o.checkpoint, std::ios::binary);
  if (!in) throw InputError("--checkpoint: cannot open " + o.checkpoint);
  const Checkpoint ck = load_checkpoint(in);
  const EncoderConfig config = config_from_checkpoint(ck);
  const auto docs = read_corpus(o);

  nlohmann::ordered_json report;
  const auto clean = score(docs, ck, config, o.threads);
  report["clean"] = eval_json(clean);
  std::printf("eval: accuracy %.4f  f1 %.4f on %zu documents\n", clean.accuracy, clean.f1, clean.n);
  if (!o.perturb_kind.empty()) {
    PerturbSpec spec{parse_perturb_kind(o.perturb_kind), o.perturb_scale, o.seed};
    const auto perturbed = score(perturb_corpus(docs, spec, o.threads), ck, config, o.threads);
    auto p = eval_json(perturbed);
    p["kind"] = o.perturb_kind;
    p["scale"] = o.perturb_scale;
    report["perturbed"] = p;
    report["accuracy_delta"] = perturbed.accuracy - clean.accuracy;
    std::printf("eval: %s@%.2f accuracy %.4f (delta %+.4f)\n", o.perturb_kind.c_str(),
                o.perturb_scale, perturbed.accuracy, perturbed.accuracy - clean.accuracy);
  }
  auto out = open_out(o.out);
  out << report.dump(2) << '\n';
  return kOk;
}

int cmd_perturb(const Options& o) {
  if (o.perturb_kind.empty()) throw InputError("--perturb-kind is required");
  const auto docs = read_corpus(o);
  PerturbSpec spec{parse_perturb_kind(o.perturb_kind), o.perturb_scale, o.seed};
  auto perturbed = perturb_corpus(docs, spec, o.threads);
  auto out = open_out(o.out);
  write_corpus(out, perturbed);
  std::cout << "perturb: " << perturbed.size() << " documents (" << o.perturb_kind << " @ "
            << o.perturb_scale << ") -> " << o.out << '\n';
  return kOk;
}

// One line per true-positive document: whitespace-separated token attributions.
std::vector<std::vector<double>> read_signs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("--signs: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!ss.eof()) throw InputError("--signs: line " + std::to_string(lineno) + " is not numeric");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_cues(const Options& o) {
  const auto docs = read_corpus(o);
  const auto pairs = pair_documents(docs);
  const auto stats = cue_stats(pairs, {}, o.fixed_class ? CueConvention::MgtClass
                                                        : CueConvention::BestClass);
  auto out = open_out(o.out);
  write_cue_table(out, stats);
  std::cout << "cues: " << stats.entries.size() << " tokens over " << stats.n_pairs
            << " pairs -> " << o.out << '\n';
  if (!o.signs.empty()) {
    const auto rows = read_signs(o.signs);
    for (std::size_t n = 1; n <= 5; ++n) {
      try {
        std::printf("gamma_%zu\t%.6f\n", n, ngram_supporter_coverage(rows, n));
      } catch (const EvalError&) {
        std::printf("gamma_%zu\t-\n", n);
      }
    }
  }
  return kOk;
}

void add_common(CLI::App* sub, Options& o, bool corpus_required = true) {
  sub->add_option("--corpus", o.corpus, "Corpus JSONL file")->required(corpus_required);
  sub->add_option("--out", o.out, "Output file")->required();
  sub->add_option("--seed", o.seed, "Random seed (default 0)");
  sub->add_option("--threads", o.threads, "Worker threads (default 1)")
      ->check(CLI::PositiveNumber);
}

void add_limits(CLI::App* sub, Options& o) {
  sub->add_option("--max-nodes", o.max_nodes, "Node cap per graph (default 90)");
  sub->add_option("--max-sentences", o.max_sentences, "Sentence cap per graph (default 45)");
  sub->add_flag("--uncapped", o.uncapped, "Ignore the node and sentence caps");
}

void add_perturb(CLI::App* sub, Options& o) {
  sub->add_option("--perturb-kind", o.perturb_kind, "delete | repeat | insert | replace")
      ->check(CLI::IsMember({"delete", "repeat", "insert", "replace"}));
  sub->add_option("--perturb-scale", o.perturb_scale, "Fraction of tokens perturbed (default 0.15)")
      ->check(CLI::Range(0.0, 1.0));
}

int run(int argc, char** argv) {
  CLI::App app{"Coherence-graph machine-generated text detection toolkit"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and write it back canonically");
  add_common(ingest, o);
  ingest->add_option("--sample", o.sample, "Keep a balanced low-resource sample of N documents");

  auto* graph = app.add_subcommand("graph", "Write one coherence graph record per document");
  add_common(graph, o);
  add_limits(graph, o);

  auto* stats = app.add_subcommand("stats", "Per-class graph statistics and degree JSD");
  add_common(stats, o);
  add_limits(stats, o);
  stats->add_option("--dump", o.dump, "Per-graph distribution dump (TSV)");

  auto* train_cmd = app.add_subcommand("train", "Train the detector; --out receives the metrics log");
  add_common(train_cmd, o);
  add_limits(train_cmd, o);
  train_cmd->add_option("--config", o.config, "key = value training config");
  train_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to write")->required();
  train_cmd->add_option("--holdout", o.holdout, "Stratified validation fraction (default 0.2)")
      ->check(CLI::Range(0.0, 0.9));

  auto* eval_cmd = app.add_subcommand("eval", "Score a corpus with a checkpoint");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to load")->required();
  add_perturb(eval_cmd, o);

  auto* perturb_cmd = app.add_subcommand("perturb", "Write a perturbed copy of a corpus");
  add_common(perturb_cmd, o);
  add_perturb(perturb_cmd, o);

  auto* cues = app.add_subcommand("cues", "Token cue productivity and coverage on paired data");
  add_common(cues, o);
  cues->add_option("--signs", o.signs, "Attribution rows for n-gram supporter coverage");
  cues->add_flag("--fixed-class", o.fixed_class, "Productivity toward the machine class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o);
    if (graph->parsed()) return cmd_graph(o);
    if (stats->parsed()) return cmd_stats(o);
    if (train_cmd->parsed()) return cmd_train(o, *train_cmd);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (perturb_cmd->parsed()) return cmd_perturb(o);
    if (cues->parsed()) return cmd_cues(o);
  } catch (const TrainError& e) {
    const char* kind = e.kind() == TrainError::Kind::SingleClassDataset ? "SingleClassDataset: " : "";
    std::cerr << "error: " << kind << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
