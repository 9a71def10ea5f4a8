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

#include "cohdet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "cohdet/eval.hpp"
#include "cohdet/parallel.hpp"
#include "cohdet/random.hpp"

namespace cohdet {
namespace {

constexpr double kProbFloor = 1e-7;

[[noreturn]] void invalid(const std::string& what) {
  throw TrainError(TrainError::Kind::InvalidConfig, "invalid config: " + what);
}

Eigen::MatrixXd label_column(std::span<const Label> labels) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) y(i, 0) = labels[i] == Label::MGT ? 1.0 : 0.0;
  return y;
}

std::vector<Eigen::MatrixXd> grads_of(const BoundParams& bound) {
  std::vector<Eigen::MatrixXd> g;
  g.reserve(bound.size());
  for (std::size_t i = 0; i < bound.size(); ++i) g.push_back(bound.at(i).grad());
  return g;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) invalid("alpha must lie in [0, 1]");
  if (!(tau > 0.0)) invalid("tau must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) invalid("momentum must lie in [0, 1)");
  if (!(reweight_beta > 0.0)) invalid("reweight_beta must be positive");
  if (batch_size == 0) invalid("batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) invalid("lr must be finite and >= 0");
  if (!(weight_decay >= 0.0)) invalid("weight_decay must be >= 0");
  if (max_epochs == 0) invalid("max_epochs must be >= 1");
  if (encoder.embed_dim == 0 || encoder.hidden_dim == 0) invalid("dimensions must be >= 1");
  if (encoder.limits.max_nodes == 0 || encoder.limits.max_sentences == 0) {
    invalid("graph limits must be >= 1");
  }
  if (!std::isfinite(encoder.gamma)) invalid("gamma must be finite");
}

// -- memory bank -------------------------------------------------------------------

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {}

void MemoryBank::push(const Eigen::MatrixXd& keys, std::span<const Label> labels) {
  if (static_cast<std::size_t>(keys.rows()) != labels.size()) {
    throw TrainError(TrainError::Kind::ShapeMismatch, "bank push: keys/labels count differ");
  }
  for (Eigen::Index i = 0; i < keys.rows(); ++i) push(keys.row(i), labels[i]);
}

void MemoryBank::push(const Eigen::RowVectorXd& key, Label label) {
  if (!entries_.empty() && entries_.front().key.size() != key.size()) {
    throw TrainError(TrainError::Kind::ShapeMismatch, "bank push: key width changed");
  }
  entries_.push_back({key, label});
  while (entries_.size() > capacity_) entries_.pop_front();
}

Eigen::MatrixXd MemoryBank::keys() const {
  if (entries_.empty()) return {};
  Eigen::MatrixXd k(static_cast<Eigen::Index>(entries_.size()), entries_.front().key.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) k.row(i) = entries_[i].key;
  return k;
}

std::vector<Label> MemoryBank::labels() const {
  std::vector<Label> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.label);
  return out;
}

// -- losses ------------------------------------------------------------------------

IclOutcome icl_loss(ad::Tape& tape, ad::Var queries, std::span<const Label> query_labels,
                    const Eigen::MatrixXd& keys, std::span<const Label> key_labels,
                    const IclOptions& options) {
  if (static_cast<std::size_t>(queries.rows()) != query_labels.size()) {
    throw ad::ShapeMismatch("icl_loss", std::to_string(query_labels.size()) + " labels",
                            std::to_string(queries.rows()) + " query rows");
  }
  if (static_cast<std::size_t>(keys.rows()) != key_labels.size()) {
    throw ad::ShapeMismatch("icl_loss", std::to_string(key_labels.size()) + " labels",
                            std::to_string(keys.rows()) + " key rows");
  }
  if (keys.rows() > 0 && keys.cols() != queries.cols()) {
    throw ad::ShapeMismatch("icl_loss", "key width " + std::to_string(keys.cols()),
                            std::to_string(queries.cols()));
  }
  const Eigen::Index m = keys.rows();
  IclOutcome out;
  std::vector<ad::Var> per_query;
  ad::Var keys_t;
  for (std::size_t i = 0; i < query_labels.size(); ++i) {
    Eigen::MatrixXd pos = Eigen::MatrixXd::Zero(1, m);
    Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(1, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      (key_labels[j] == query_labels[i] ? pos : neg)(0, j) = 1.0;
    }
    const double n_pos = pos.sum();
    const double n_neg = neg.sum();
    if (n_pos == 0.0 || n_neg == 0.0) {
      ++out.skipped;
      continue;
    }
    if (!keys_t.valid()) keys_t = tape.constant(keys.transpose());

    ad::Var q = tape.slice_rows(queries, static_cast<Eigen::Index>(i), 1);
    ad::Var dots = matmul(q, keys_t);
    ad::Var logits = dots * (1.0 / options.tau);

    ad::Var weights;
    if (!options.reweight) {
      weights = tape.constant(Eigen::MatrixXd::Ones(1, m));
    } else {
      ad::Var mean_neg = matmul(dots, tape.constant(neg.transpose() / n_neg));
      if (mean_neg.value()(0, 0) == 0.0) {
        weights = tape.constant(pos + options.reweight_beta * neg);
      } else {
        ad::Var rf = relu(tape.scale_by(tape.reciprocal(mean_neg), dots) * options.reweight_beta);
        weights = cwise_product(rf, tape.constant(neg)) + tape.constant(pos);
      }
    }

    // log sum_j w_j exp(l_j), shifted by max_j l_j; the shift is a constant.
    const double shift = logits.value().maxCoeff();
    ad::Var scaled = exp(tape.add_scalar(logits, -shift));
    ad::Var log_denom = tape.add_scalar(log(tape.dot(scaled, weights)), shift);
    per_query.push_back(log_denom * n_pos - tape.dot(logits, tape.constant(pos)));
    ++out.scored;
  }
  if (per_query.empty()) {
    out.loss = tape.constant(Eigen::MatrixXd::Zero(1, 1));
  } else {
    out.loss = tape.mean_rows(tape.concat_rows(per_query));
  }
  return out;
}

ad::Var ce_loss(ad::Tape& tape, ad::Var probs, std::span<const Label> labels) {
  if (probs.cols() != 1 || static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw ad::ShapeMismatch("ce_loss", ad::Tape::shape(probs.value()),
                            std::to_string(labels.size()) + "x1");
  }
  const Eigen::MatrixXd y = label_column(labels);
  ad::Var p = tape.clamp(probs, kProbFloor, 1.0 - kProbFloor);
  ad::Var log_p = log(p);
  ad::Var log_q = log(tape.add_scalar(p * -1.0, 1.0));
  ad::Var ll = tape.dot(log_p, tape.constant(y)) +
               tape.dot(log_q, tape.constant((1.0 - y.array()).matrix()));
  return ll * (-1.0 / static_cast<double>(labels.size()));
}

double ce_loss(std::span<const double> probs, std::span<const Label> labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw ad::ShapeMismatch("ce_loss", std::to_string(probs.size()) + " probabilities",
                            std::to_string(labels.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbFloor, 1.0 - kProbFloor);
    total -= labels[i] == Label::MGT ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

ad::Var total_loss(ad::Tape& tape, ad::Var icl, ad::Var ce, double alpha) {
  (void)tape;
  return icl * alpha + ce * (1.0 - alpha);
}

double total_loss(double icl, double ce, double alpha) { return alpha * icl + (1.0 - alpha) * ce; }

void momentum_update(ParamSet& key, const ParamSet& query, double momentum) {
  if (!key.same_layout(query)) {
    throw TrainError(TrainError::Kind::ShapeMismatch, "momentum update: parameter layouts differ");
  }
  for (std::size_t i = 0; i < key.size(); ++i) {
    key.at(i).value = momentum * key.at(i).value + (1.0 - momentum) * query.at(i).value;
  }
}

void DecoupledWeightDecayGd::apply(ParamSet& params, std::span<const Eigen::MatrixXd> grads) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.at(i).value;
    p -= lr_ * grads[i] + (lr_ * weight_decay_) * p;
  }
}

nlohmann::ordered_json metrics_json(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["train_icl"] = m.train_icl;
  j["train_ce"] = m.train_ce;
  j["val_loss"] = m.val_loss;
  j["val_accuracy"] = m.val_accuracy;
  j["val_f1"] = m.val_f1;
  return j;
}

// -- training ----------------------------------------------------------------------

std::vector<EncoderInput> prepare_inputs(const std::vector<Document>& docs,
                                         const EncoderConfig& config, std::size_t threads) {
  std::vector<EncoderInput> out(docs.size());
  parallel_for(docs.size(), threads,
               [&](std::size_t i) { out[i] = prepare_input(docs[i], config); });
  return out;
}

std::vector<double> predict(std::span<const EncoderInput> inputs, const ParamSet& encoder,
                            const ParamSet& classifier, const EncoderConfig& config) {
  std::vector<double> p;
  p.reserve(inputs.size());
  for (const auto& in : inputs) p.push_back(predict_probability(in, encoder, classifier, config));
  return p;
}

namespace {

Eigen::MatrixXd encode_keys(std::span<const EncoderInput> inputs,
                            const std::vector<std::size_t>& idx, const ParamSet& key_encoder,
                            const TrainConfig& config) {
  Eigen::MatrixXd keys(static_cast<Eigen::Index>(idx.size()),
                       static_cast<Eigen::Index>(config.encoder.output_dim()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    keys.row(i) = encode_value(inputs[idx[i]], key_encoder, config.encoder);
  }
  if (config.normalize_embeddings) keys.rowwise().normalize();
  return keys;
}

std::vector<Label> labels_at(std::span<const EncoderInput> inputs,
                             const std::vector<std::size_t>& idx) {
  std::vector<Label> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(inputs[i].label);
  return out;
}

}  // namespace

TrainResult train(std::span<const EncoderInput> train_set, std::span<const EncoderInput> val,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const std::size_t n = train_set.size();
  std::size_t n_mgt = 0;
  for (const auto& in : train_set) n_mgt += in.label == Label::MGT ? 1 : 0;
  if (n == 0 || n_mgt == 0 || n_mgt == n) {
    throw TrainError(TrainError::Kind::SingleClassDataset,
                     "training needs both labels; got " + std::to_string(n - n_mgt) +
                         " human and " + std::to_string(n_mgt) + " machine documents");
  }
  if (val.empty()) val = train_set;

  // Separate streams keep query sampling identical whether or not keys are
  // drawn.
  Rng init_rng = make_rng(mix_seed(config.seed, 0));
  Rng query_rng = make_rng(mix_seed(config.seed, 1));
  Rng key_rng = make_rng(mix_seed(config.seed, 2));

  EncoderConfig enc_config = config.encoder;
  enc_config.seed = config.seed;
  TrainResult result;
  ParamSet query_encoder = init_encoder_params(enc_config, init_rng);
  ParamSet classifier = init_classifier_params(enc_config, init_rng);
  ParamSet key_encoder = query_encoder;

  std::unique_ptr<UpdateRule> rule =
      options.make_update_rule
          ? options.make_update_rule(config)
          : std::make_unique<DecoupledWeightDecayGd>(config.lr, config.weight_decay);

  const std::size_t bank_capacity = config.bank_size > 0 ? config.bank_size : n;
  MemoryBank bank(bank_capacity);
  if (!options.ce_only) {
    std::vector<std::size_t> fill;
    while (fill.size() < bank_capacity) {
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      shuffle(perm, key_rng);
      for (std::size_t i = 0; i < n && fill.size() < bank_capacity; ++i) fill.push_back(perm[i]);
    }
    const auto fill_labels = labels_at(train_set, fill);
    bank.push(encode_keys(train_set, fill, key_encoder, config), fill_labels);
  }

  const std::size_t batch = std::min(config.batch_size, n);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  std::vector<Label> val_labels;
  for (const auto& in : val) val_labels.push_back(in.label);

  double best_accuracy = -1.0;
  std::size_t since_best = 0;
  std::size_t step = 0;
  auto view = [&]() { return StepView{step, key_encoder, query_encoder, bank}; };

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double sum_loss = 0.0, sum_icl = 0.0, sum_ce = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      const auto query_idx = sample_without_replacement(query_rng, n, batch);
      const auto query_labels = labels_at(train_set, query_idx);

      ad::Tape tape;
      BoundParams enc(tape, query_encoder, true);
      BoundParams cls(tape, classifier, true);
      std::vector<const EncoderInput*> batch_inputs;
      for (auto i : query_idx) batch_inputs.push_back(&train_set[i]);
      ad::Var docs = encode_batch(tape, batch_inputs, enc, enc_config);
      ad::Var ce = ce_loss(tape, classify(tape, docs, cls), query_labels);

      ad::Var loss = ce;
      double icl_value = 0.0;
      Eigen::MatrixXd new_keys;
      std::vector<Label> new_key_labels;
      if (!options.ce_only) {
        const auto key_idx = sample_without_replacement(key_rng, n, batch);
        new_key_labels = labels_at(train_set, key_idx);
        new_keys = encode_keys(train_set, key_idx, key_encoder, config);
        ad::Var queries = config.normalize_embeddings ? l2_normalize_rows(docs) : docs;
        const auto bank_labels = bank.labels();
        IclOutcome icl = icl_loss(tape, queries, query_labels, bank.keys(), bank_labels,
                                  {config.tau, config.reweight_beta, true});
        icl_value = icl.loss.value()(0, 0);
        loss = total_loss(tape, icl.loss, ce, config.alpha);
      }
      const double loss_value = loss.value()(0, 0);
      if (!std::isfinite(loss_value)) {
        throw TrainError(TrainError::Kind::NonFiniteLoss,
                         "non-finite loss at step " + std::to_string(step));
      }
      tape.backward(loss);
      if (options.hooks.before_update) options.hooks.before_update(view());
      rule->apply(query_encoder, grads_of(enc));
      rule->apply(classifier, grads_of(cls));
      if (options.hooks.after_update) options.hooks.after_update(view());

      if (!options.ce_only) {
        momentum_update(key_encoder, query_encoder, config.momentum);
        bank.push(new_keys, new_key_labels);
      }
      if (options.hooks.after_step) options.hooks.after_step(view());

      sum_loss += loss_value;
      sum_icl += icl_value;
      sum_ce += ce.value()(0, 0);
    }

    EpochMetrics m;
    m.epoch = epoch;
    const double steps = static_cast<double>(steps_per_epoch);
    m.train_loss = sum_loss / steps;
    m.train_icl = sum_icl / steps;
    m.train_ce = sum_ce / steps;
    const auto probs = predict(val, query_encoder, classifier, enc_config);
    m.val_loss = ce_loss(probs, val_labels);
    std::vector<Label> preds;
    for (double p : probs) preds.push_back(p >= 0.5 ? Label::MGT : Label::HWT);
    const auto report = evaluate(preds, val_labels);
    m.val_accuracy = report.accuracy;
    m.val_f1 = report.f1;
    result.log.push_back(m);
    if (options.hooks.after_epoch) options.hooks.after_epoch(m);

    if (m.val_accuracy > best_accuracy) {
      best_accuracy = m.val_accuracy;
      since_best = 0;
      result.best_epoch = epoch;
      result.encoder = query_encoder;
      result.key_encoder = key_encoder;
      result.classifier = classifier;
    } else if (++since_best >= config.patience && config.patience > 0) {
      break;
    }
  }
  result.steps = step;
  return result;
}

TrainResult train(const std::vector<Document>& train_docs, const std::vector<Document>& val_docs,
                  const TrainConfig& config, const TrainOptions& options) {
  const auto train_inputs = prepare_inputs(train_docs, config.encoder);
  const auto val_inputs = prepare_inputs(val_docs, config.encoder);
  return train(train_inputs, val_inputs, config, options);
}

}  // namespace cohdet
