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

#include "cohdet/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace cohdet {
namespace {

constexpr const char* kGates[] = {"i", "f", "g", "o"};

[[noreturn]] void dimension_mismatch(const std::string& what, std::size_t got,
                                     std::size_t want) {
  throw EncoderError(EncoderError::Kind::DimensionMismatch,
                     what + " has dimension " + std::to_string(got) + ", config expects " +
                         std::to_string(want));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Eigen::MatrixXd uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Eigen::MatrixXd m(rows, cols);
  // Filled row-major so the draw order does not depend on Eigen's layout.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = uniform(rng, -bound, bound);
  }
  return m;
}

}  // namespace

// -- ParamSet ------------------------------------------------------------------

void ParamSet::add(std::string name, Eigen::MatrixXd value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  tensors_.push_back({std::move(name), std::move(value)});
}

Eigen::MatrixXd& ParamSet::operator[](std::string_view name) {
  for (auto& t : tensors_) {
    if (t.name == name) return t.value;
  }
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

const Eigen::MatrixXd& ParamSet::operator[](std::string_view name) const {
  return const_cast<ParamSet&>(*this)[name];
}

bool ParamSet::contains(std::string_view name) const {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const NamedTensor& t) { return t.name == name; });
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
  }
  return true;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (tensors_[i].value != other.tensors_[i].value) return false;
  }
  return true;
}

BoundParams::BoundParams(ad::Tape& tape, const ParamSet& params, bool trainable)
    : params_(&params) {
  vars_.reserve(params.size());
  for (const auto& t : params) {
    vars_.push_back(trainable ? tape.leaf(t.value) : tape.constant(t.value));
  }
}

ad::Var BoundParams::operator[](std::string_view name) const {
  for (std::size_t i = 0; i < params_->size(); ++i) {
    if (params_->at(i).name == name) return vars_[i];
  }
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

// -- embeddings ----------------------------------------------------------------

Eigen::RowVectorXd hash_embedding(std::string_view token, std::size_t dim) {
  const std::uint64_t h = fnv1a(token);
  const double magnitude = 1.0 / std::sqrt(static_cast<double>(dim));
  Eigen::RowVectorXd v(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    v(j) = (mix_seed(h, j) >> 63) != 0 ? magnitude : -magnitude;
  }
  return v;
}

Eigen::MatrixXd token_embedding_matrix(const Document& doc, std::size_t embed_dim) {
  const std::size_t n = doc.tokens.size();
  Eigen::MatrixXd m(n, embed_dim);
  if (doc.token_embeddings) {
    const auto& rows = *doc.token_embeddings;
    if (!rows.empty() && rows.front().size() != embed_dim) {
      dimension_mismatch("token_embeddings of '" + doc.id + "'", rows.front().size(), embed_dim);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < embed_dim; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }
  for (std::size_t i = 0; i < n; ++i) m.row(i) = hash_embedding(doc.tokens[i], embed_dim);
  return m;
}

Eigen::MatrixXd init_node_embeddings(const Document& doc, const CoherenceGraph& g,
                                     std::size_t embed_dim) {
  const Eigen::MatrixXd tokens = token_embedding_matrix(doc, embed_dim);
  Eigen::MatrixXd z(g.size(), embed_dim);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& e = doc.entities[g.nodes[i].mention];
    z.row(i) = tokens.middleRows(e.token_start, e.token_end - e.token_start).colwise().mean();
  }
  return z;
}

Eigen::RowVectorXd sequence_embedding(const Document& doc, std::size_t embed_dim) {
  if (doc.doc_embedding) {
    if (doc.doc_embedding->size() != embed_dim) {
      dimension_mismatch("doc_embedding of '" + doc.id + "'", doc.doc_embedding->size(),
                         embed_dim);
    }
    return Eigen::Map<const Eigen::RowVectorXd>(doc.doc_embedding->data(),
                                                static_cast<Eigen::Index>(embed_dim));
  }
  if (doc.tokens.empty()) return Eigen::RowVectorXd::Zero(embed_dim);
  return token_embedding_matrix(doc, embed_dim).colwise().mean();
}

// -- parameters ----------------------------------------------------------------

ParamSet init_encoder_params(const EncoderConfig& config, Rng& rng) {
  const std::size_t d = config.embed_dim;
  const std::size_t h = config.hidden_dim;
  ParamSet p;
  for (const char* rel : {"inner", "inter"}) {
    p.add(std::string("gcn.") + rel + ".w1", uniform_matrix(rng, d, h));
    p.add(std::string("gcn.") + rel + ".w2", uniform_matrix(rng, h, h));
  }
  p.add("sent.w", uniform_matrix(rng, h, h));
  p.add("sent.b", Eigen::MatrixXd::Zero(1, h));
  p.add("attn.wk", uniform_matrix(rng, h, h));
  p.add("attn.wq", uniform_matrix(rng, h, h));
  p.add("attn.wv", uniform_matrix(rng, h, h));
  for (const char* gate : kGates) {
    const std::string g = gate;
    p.add("lstm.w" + g, uniform_matrix(rng, h, h));
    p.add("lstm.u" + g, uniform_matrix(rng, h, h));
    p.add("lstm.b" + g, Eigen::MatrixXd::Constant(1, h, g == "f" ? 1.0 : 0.0));
  }
  return p;
}

ParamSet init_classifier_params(const EncoderConfig& config, Rng& rng) {
  ParamSet p;
  p.add("cls.w", uniform_matrix(rng, config.output_dim(), 1));
  p.add("cls.b", Eigen::MatrixXd::Zero(1, 1));
  return p;
}

// -- forward pass ----------------------------------------------------------------

EncoderInput prepare_input(const Document& doc, const EncoderConfig& config) {
  return prepare_input(doc, build_graph(doc, config.limits), config);
}

EncoderInput prepare_input(const Document& doc, const CoherenceGraph& g,
                           const EncoderConfig& config) {
  EncoderInput in;
  in.label = doc.label;
  in.node_features = init_node_embeddings(doc, g, config.embed_dim);
  in.sequence = sequence_embedding(doc, config.embed_dim);
  const auto n = static_cast<Eigen::Index>(g.size());
  if (n > 0) {
    in.lap_inner = normalized_laplacian(g.inner);
    in.lap_inter = normalized_laplacian(g.inter);
  }
  in.sentence_pool = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.n_sentences), n);
  std::vector<int> per_sentence(g.n_sentences, 0);
  for (const auto& node : g.nodes) ++per_sentence[node.sentence];
  for (Eigen::Index i = 0; i < n; ++i) {
    const int s = g.nodes[i].sentence;
    in.sentence_pool(s, i) = 1.0 / per_sentence[s];
  }
  return in;
}

ad::Var rgcn_forward(ad::Tape& tape, ad::Var node_features, const Eigen::MatrixXd& lap_inner,
                     const Eigen::MatrixXd& lap_inter, const BoundParams& params) {
  ad::Var out;
  for (const char* rel : {"inner", "inter"}) {
    const std::string prefix = std::string("gcn.") + rel;
    ad::Var lap = tape.constant(std::string_view(rel) == "inner" ? lap_inner : lap_inter);
    ad::Var layer1 = relu(matmul(matmul(lap, node_features), params[prefix + ".w1"]));
    ad::Var layer2 = matmul(matmul(lap, layer1), params[prefix + ".w2"]);
    out = out.valid() ? out + layer2 : layer2;
  }
  return out;
}

ad::Var aggregate_sentences(ad::Tape& tape, ad::Var h, const Eigen::MatrixXd& sentence_pool,
                            const BoundParams& params) {
  ad::Var activated = sigmoid(matmul(h, params["sent.w"]) + params["sent.b"]);
  return matmul(tape.constant(sentence_pool), activated);
}

ad::Var attention_weights(ad::Tape& tape, ad::Var sentences, const BoundParams& params,
                          double gamma) {
  ad::Var keys = l2_normalize_rows(matmul(sentences, params["attn.wk"]));
  ad::Var queries = l2_normalize_rows(matmul(sentences, params["attn.wq"]));
  const double width = static_cast<double>(keys.cols());
  ad::Var logits = matmul(keys, transpose(queries)) * (gamma / std::sqrt(width));
  (void)tape;
  return softmax_rows(logits);
}

ad::Var attention_lstm(ad::Tape& tape, ad::Var sentences, const BoundParams& params,
                       double gamma) {
  const Eigen::Index steps = sentences.rows();
  if (steps == 0) {
    throw EncoderError(EncoderError::Kind::EmptySentenceList, "attention over zero sentences");
  }
  ad::Var attended =
      matmul(attention_weights(tape, sentences, params, gamma), matmul(sentences, params["attn.wv"]));

  const Eigen::Index width = params["lstm.ui"].rows();
  ad::Var h = tape.constant(Eigen::MatrixXd::Zero(1, width));
  ad::Var c = h;
  auto gate = [&](const char* g, ad::Var x) {
    const std::string s = g;
    return matmul(x, params["lstm.w" + s]) + matmul(h, params["lstm.u" + s]) +
           params["lstm.b" + s];
  };
  for (Eigen::Index t = 0; t < steps; ++t) {
    ad::Var x = tape.slice_rows(attended, t, 1);
    ad::Var input = sigmoid(gate("i", x));
    ad::Var forget = sigmoid(gate("f", x));
    ad::Var cell = tanh(gate("g", x));
    ad::Var output = sigmoid(gate("o", x));
    c = cwise_product(forget, c) + cwise_product(input, cell);
    h = cwise_product(output, tanh(c));
  }
  return h;
}

ad::Var encode_document(ad::Tape& tape, const EncoderInput& input, const BoundParams& params,
                        const EncoderConfig& config) {
  ad::Var coherence;
  if (input.n_nodes() == 0) {
    coherence = tape.constant(Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(config.hidden_dim)));
  } else {
    ad::Var z = tape.constant(input.node_features);
    ad::Var h = rgcn_forward(tape, z, input.lap_inner, input.lap_inter, params);
    ad::Var sentences = aggregate_sentences(tape, h, input.sentence_pool, params);
    coherence = attention_lstm(tape, sentences, params, config.gamma);
  }
  const ad::Var parts[] = {coherence, tape.constant(input.sequence)};
  return tape.concat_cols(parts);
}

ad::Var encode_batch(ad::Tape& tape, std::span<const EncoderInput* const> batch,
                     const BoundParams& params, const EncoderConfig& config) {
  std::vector<ad::Var> rows;
  rows.reserve(batch.size());
  for (const auto* input : batch) rows.push_back(encode_document(tape, *input, params, config));
  return tape.concat_rows(rows);
}

ad::Var classify(ad::Tape& tape, ad::Var docs, const BoundParams& classifier) {
  (void)tape;
  return sigmoid(matmul(docs, classifier["cls.w"]) + classifier["cls.b"]);
}

Eigen::RowVectorXd encode_value(const EncoderInput& input, const ParamSet& params,
                                const EncoderConfig& config) {
  ad::Tape tape;
  BoundParams bound(tape, params, false);
  return encode_document(tape, input, bound, config).value();
}

double predict_probability(const EncoderInput& input, const ParamSet& encoder,
                           const ParamSet& classifier, const EncoderConfig& config) {
  ad::Tape tape;
  BoundParams enc(tape, encoder, false);
  BoundParams cls(tape, classifier, false);
  return classify(tape, encode_document(tape, input, enc, config), cls).value()(0, 0);
}

// -- checkpoint ----------------------------------------------------------------

namespace {

constexpr const char* kMagic = "cohdet-checkpoint";
constexpr int kVersion = 1;

[[noreturn]] void bad_checkpoint(const std::string& what) {
  throw EncoderError(EncoderError::Kind::BadCheckpoint, "checkpoint: " + what);
}

void write_tensor(std::ostream& out, const char* group, const NamedTensor& t) {
  out << "tensor " << group << ' ' << t.name << ' ' << t.value.rows() << ' ' << t.value.cols()
      << '\n';
  char buf[48];
  for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%a", t.value(r, c));
      out << (c ? " " : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [k, v] : checkpoint.meta) out << "meta " << k << ' ' << v << '\n';
  for (const auto& t : checkpoint.encoder) write_tensor(out, "encoder", t);
  for (const auto& t : checkpoint.classifier) write_tensor(out, "classifier", t);
  out << "end\n";
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) bad_checkpoint("missing header");
  if (version != kVersion) bad_checkpoint("unsupported version " + std::to_string(version));
  Checkpoint cp;
  std::string word;
  while (in >> word) {
    if (word == "end") return cp;
    if (word == "meta") {
      std::string key, value;
      if (!(in >> key >> value)) bad_checkpoint("truncated meta line");
      cp.meta[key] = value;
    } else if (word == "tensor") {
      std::string group, name;
      Eigen::Index rows = 0, cols = 0;
      if (!(in >> group >> name >> rows >> cols) || rows < 0 || cols < 0) {
        bad_checkpoint("bad tensor header");
      }
      Eigen::MatrixXd m(rows, cols);
      std::string token;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!(in >> token)) bad_checkpoint("truncated tensor '" + name + "'");
          char* end = nullptr;
          m(r, c) = std::strtod(token.c_str(), &end);
          if (end == token.c_str() || *end != '\0') bad_checkpoint("bad value '" + token + "'");
        }
      }
      if (group == "encoder") {
        cp.encoder.add(name, std::move(m));
      } else if (group == "classifier") {
        cp.classifier.add(name, std::move(m));
      } else {
        bad_checkpoint("unknown tensor group '" + group + "'");
      }
    } else {
      bad_checkpoint("unexpected '" + word + "'");
    }
  }
  bad_checkpoint("missing end marker");
}

void store_config(Checkpoint& checkpoint, const EncoderConfig& config) {
  checkpoint.meta["embed_dim"] = std::to_string(config.embed_dim);
  checkpoint.meta["hidden_dim"] = std::to_string(config.hidden_dim);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", config.gamma);
  checkpoint.meta["gamma"] = buf;
  checkpoint.meta["max_nodes"] = std::to_string(config.limits.max_nodes);
  checkpoint.meta["max_sentences"] = std::to_string(config.limits.max_sentences);
  checkpoint.meta["seed"] = std::to_string(config.seed);
}

EncoderConfig config_from_checkpoint(const Checkpoint& checkpoint) {
  EncoderConfig config;
  auto get = [&](const char* key) -> const std::string& {
    auto it = checkpoint.meta.find(key);
    if (it == checkpoint.meta.end()) bad_checkpoint(std::string("missing meta '") + key + "'");
    return it->second;
  };
  try {
    config.embed_dim = std::stoull(get("embed_dim"));
    config.hidden_dim = std::stoull(get("hidden_dim"));
    config.gamma = std::strtod(get("gamma").c_str(), nullptr);
    config.limits.max_nodes = std::stoull(get("max_nodes"));
    config.limits.max_sentences = std::stoull(get("max_sentences"));
    config.seed = std::stoull(get("seed"));
  } catch (const std::logic_error&) {
    bad_checkpoint("malformed meta value");
  }
  return config;
}

}  // namespace cohdet
