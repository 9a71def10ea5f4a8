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
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cohdet/autodiff.hpp"
#include "cohdet/corpus.hpp"
#include "cohdet/encoder.hpp"

namespace cohdet {

struct TrainConfig {
  double alpha = 0.6;          // weight of the contrastive term
  double tau = 0.2;            // temperature
  double momentum = 0.99;      // key encoder EMA coefficient
  double reweight_beta = 1.0;  // hard-negative reweighting scale
  std::size_t bank_size = 0;   // 0: the training-set size
  std::size_t batch_size = 8;
  double lr = 1e-5;
  double weight_decay = 0.01;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  // Contrastive similarities use L2-normalized representations.
  bool normalize_embeddings = true;
  EncoderConfig encoder;

  /// Throws TrainError(InvalidConfig) on out-of-range values.
  void validate() const;
};

class TrainError : public std::runtime_error {
 public:
  enum class Kind { SingleClassDataset, NonFiniteLoss, InvalidConfig, ShapeMismatch };
  TrainError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// FIFO queue of (key representation, label) with fixed capacity.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity);

  /// Appends rows in order, evicting the oldest entries beyond capacity.
  void push(const Eigen::MatrixXd& keys, std::span<const Label> labels);
  void push(const Eigen::RowVectorXd& key, Label label);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }

  /// Oldest first; size() x F.
  Eigen::MatrixXd keys() const;
  std::vector<Label> labels() const;

 private:
  struct Entry {
    Eigen::RowVectorXd key;
    Label label;
  };
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

struct IclOptions {
  double tau = 0.2;
  double reweight_beta = 1.0;
  // false: every negative weight is 1, which is the standard supervised
  // contrastive loss.
  bool reweight = true;
};

struct IclOutcome {
  ad::Var loss;  // 1x1 mean over scored queries; 0 when none was scored
  std::size_t scored = 0;
  std::size_t skipped = 0;  // queries without a positive or a negative in the bank
};

/// Improved contrastive loss of each query row against the bank keys.
///
/// For query i with positives P(i) and negatives N(i) among the keys:
///   L_i = -sum_{j in P(i)} log( S_ij / (sum_P S_ip + sum_N rf_in S_in) )
///   S_ij = exp(q_i . k_j / tau)
///   rf_in = beta * (q_i . k_n) / mean_{n' in N(i)} (q_i . k_n')
/// Weights are clamped at zero, and fall back to beta when the mean negative
/// similarity is exactly zero.
IclOutcome icl_loss(ad::Tape& tape, ad::Var queries, std::span<const Label> query_labels,
                    const Eigen::MatrixXd& keys, std::span<const Label> key_labels,
                    const IclOptions& options);

/// Mean binary cross-entropy of P(MGT) against the labels; probabilities are
/// clamped to [1e-7, 1 - 1e-7].
ad::Var ce_loss(ad::Tape& tape, ad::Var probs, std::span<const Label> labels);
double ce_loss(std::span<const double> probs, std::span<const Label> labels);

ad::Var total_loss(ad::Tape& tape, ad::Var icl, ad::Var ce, double alpha);
double total_loss(double icl, double ce, double alpha);

/// key <- m * key + (1 - m) * query, elementwise.
void momentum_update(ParamSet& key, const ParamSet& query, double momentum);

/// Gradient step applied to one parameter set.
class UpdateRule {
 public:
  virtual ~UpdateRule() = default;
  virtual void apply(ParamSet& params, std::span<const Eigen::MatrixXd> grads) = 0;
};

/// theta <- theta - lr * grad - lr * weight_decay * theta.
class DecoupledWeightDecayGd : public UpdateRule {
 public:
  DecoupledWeightDecayGd(double lr, double weight_decay) : lr_(lr), weight_decay_(weight_decay) {}
  void apply(ParamSet& params, std::span<const Eigen::MatrixXd> grads) override;

 private:
  double lr_;
  double weight_decay_;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_icl = 0.0;
  double train_ce = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
};

nlohmann::ordered_json metrics_json(const EpochMetrics& m);

struct StepView {
  std::size_t step;
  const ParamSet& key_encoder;
  const ParamSet& query_encoder;
  const MemoryBank& bank;
};

struct TrainHooks {
  std::function<void(const StepView&)> before_update;    // after backward
  std::function<void(const StepView&)> after_update;     // before the momentum update
  std::function<void(const StepView&)> after_step;       // after the bank push
  std::function<void(const EpochMetrics&)> after_epoch;
};

struct TrainResult {
  ParamSet encoder;      // query encoder at the best validation epoch
  ParamSet key_encoder;
  ParamSet classifier;
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

struct TrainOptions {
  // Cross-entropy only: no keys are encoded and no bank is kept.
  bool ce_only = false;
  // Factory for the update rule; decoupled-weight-decay gradient descent when
  // empty.
  std::function<std::unique_ptr<UpdateRule>(const TrainConfig&)> make_update_rule;
  TrainHooks hooks;
};

/// Contrastive training loop. Validation picks the best epoch and drives early
/// stopping; the training inputs double as validation when `val` is empty.
TrainResult train(std::span<const EncoderInput> train_set, std::span<const EncoderInput> val,
                  const TrainConfig& config, const TrainOptions& options = {});

TrainResult train(const std::vector<Document>& train_docs, const std::vector<Document>& val_docs,
                  const TrainConfig& config, const TrainOptions& options = {});

/// P(MGT) for every input.
std::vector<double> predict(std::span<const EncoderInput> inputs, const ParamSet& encoder,
                            const ParamSet& classifier, const EncoderConfig& config);

std::vector<EncoderInput> prepare_inputs(const std::vector<Document>& docs,
                                         const EncoderConfig& config, std::size_t threads = 1);

}  // namespace cohdet
