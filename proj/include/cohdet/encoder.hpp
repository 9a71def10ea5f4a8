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

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cohdet/autodiff.hpp"
#include "cohdet/coherence_graph.hpp"
#include "cohdet/corpus.hpp"
#include "cohdet/random.hpp"

namespace cohdet {

struct EncoderConfig {
  static constexpr std::size_t gcn_layers = 2;

  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 64;
  double gamma = 1.0;  // attention logit scale
  std::uint64_t seed = 0;
  GraphLimits limits;

  std::size_t output_dim() const { return hidden_dim + embed_dim; }
};

class EncoderError : public std::runtime_error {
 public:
  enum class Kind { DimensionMismatch, EmptySentenceList, BadCheckpoint };
  EncoderError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

/// Ordered collection of named weight matrices.
class ParamSet {
 public:
  void add(std::string name, Eigen::MatrixXd value);
  Eigen::MatrixXd& operator[](std::string_view name);
  const Eigen::MatrixXd& operator[](std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  NamedTensor& at(std::size_t i) { return tensors_[i]; }
  const NamedTensor& at(std::size_t i) const { return tensors_[i]; }

  /// Same names, order and shapes.
  bool same_layout(const ParamSet& other) const;
  bool operator==(const ParamSet& other) const;

 private:
  std::vector<NamedTensor> tensors_;
};

/// Every tensor of a ParamSet recorded as a tape leaf (or constant).
class BoundParams {
 public:
  BoundParams(ad::Tape& tape, const ParamSet& params, bool trainable);
  ad::Var operator[](std::string_view name) const;
  ad::Var at(std::size_t i) const { return vars_[i]; }
  std::size_t size() const { return vars_.size(); }

 private:
  const ParamSet* params_;
  std::vector<ad::Var> vars_;
};

// -- embeddings --------------------------------------------------------------

/// Deterministic stand-in token embedding: one hashed sign per dimension,
/// scaled to unit norm.
Eigen::RowVectorXd hash_embedding(std::string_view token, std::size_t dim);

/// n_tokens x embed_dim: the corpus-supplied token embeddings when present,
/// the hash embedding otherwise.
Eigen::MatrixXd token_embedding_matrix(const Document& doc, std::size_t embed_dim);

/// N x embed_dim: mean token embedding over each node's mention span.
Eigen::MatrixXd init_node_embeddings(const Document& doc, const CoherenceGraph& g,
                                     std::size_t embed_dim);

/// 1 x embed_dim document-level sequence vector: the corpus doc_embedding, or
/// the mean token embedding.
Eigen::RowVectorXd sequence_embedding(const Document& doc, std::size_t embed_dim);

// -- parameters --------------------------------------------------------------

/// Query/key encoder weights. Weights are uniform in +-1/sqrt(fan_in), biases
/// zero except the LSTM forget gate (1.0).
ParamSet init_encoder_params(const EncoderConfig& config, Rng& rng);
/// Linear head on the document representation: cls.w (F x 1), cls.b (1 x 1).
ParamSet init_classifier_params(const EncoderConfig& config, Rng& rng);

// -- forward pass ------------------------------------------------------------

/// Parameter-independent inputs of one document, computed once.
struct EncoderInput {
  Eigen::MatrixXd node_features;  // N x embed_dim
  Eigen::MatrixXd lap_inner;      // N x N
  Eigen::MatrixXd lap_inter;      // N x N
  Eigen::MatrixXd sentence_pool;  // S x N; row s averages the nodes of sentence s
  Eigen::RowVectorXd sequence;    // 1 x embed_dim
  Label label = Label::HWT;

  std::size_t n_nodes() const { return static_cast<std::size_t>(node_features.rows()); }
  std::size_t n_sentences() const { return static_cast<std::size_t>(sentence_pool.rows()); }
};

EncoderInput prepare_input(const Document& doc, const EncoderConfig& config);
EncoderInput prepare_input(const Document& doc, const CoherenceGraph& g,
                           const EncoderConfig& config);

/// Sum over relations of A_r relu(A_r Z W_r1) W_r2; N x hidden.
ad::Var rgcn_forward(ad::Tape& tape, ad::Var node_features, const Eigen::MatrixXd& lap_inner,
                     const Eigen::MatrixXd& lap_inter, const BoundParams& params);

/// Per-sentence mean of sigmoid(H W_s + b_s); S x hidden, zero rows for
/// sentences without nodes.
ad::Var aggregate_sentences(ad::Tape& tape, ad::Var h, const Eigen::MatrixXd& sentence_pool,
                            const BoundParams& params);

/// softmax_rows(gamma * norm(K) norm(Q)^T / sqrt(d)); S x S.
ad::Var attention_weights(ad::Tape& tape, ad::Var sentences, const BoundParams& params,
                          double gamma);

/// Final hidden state of an LSTM run over the attended sentence sequence;
/// 1 x hidden.
ad::Var attention_lstm(ad::Tape& tape, ad::Var sentences, const BoundParams& params,
                       double gamma);

/// D = Z_c ++ sequence; 1 x (hidden + embed). Documents without nodes get
/// Z_c = 0.
ad::Var encode_document(ad::Tape& tape, const EncoderInput& input, const BoundParams& params,
                        const EncoderConfig& config);

/// Stacks the representations of a batch; B x F.
ad::Var encode_batch(ad::Tape& tape, std::span<const EncoderInput* const> batch,
                     const BoundParams& params, const EncoderConfig& config);

/// P(MGT) per row of `docs`; B x 1.
ad::Var classify(ad::Tape& tape, ad::Var docs, const BoundParams& classifier);

/// Forward pass without gradients.
Eigen::RowVectorXd encode_value(const EncoderInput& input, const ParamSet& params,
                                const EncoderConfig& config);
double predict_probability(const EncoderInput& input, const ParamSet& encoder,
                           const ParamSet& classifier, const EncoderConfig& config);

// -- checkpoint ---------------------------------------------------------------

struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParamSet encoder;
  ParamSet classifier;
};

/// Text format; values are hexadecimal floats so the round trip is bitwise.
void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(std::istream& in);

/// Encoder config recorded in the checkpoint meta block.
void store_config(Checkpoint& checkpoint, const EncoderConfig& config);
EncoderConfig config_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace cohdet
