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
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cohdet/corpus.hpp"

namespace cohdet {

class EvalError : public std::runtime_error {
 public:
  enum class Kind { LengthMismatch, UnpairedDocument, NoWindows, BadArgument };
  EvalError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// -- detection metrics ---------------------------------------------------------

/// MGT is the positive class.
struct EvalReport {
  std::size_t n = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // 0 when precision + recall = 0
};

EvalReport evaluate(std::span<const Label> predictions, std::span<const Label> labels);

// -- perturbation ----------------------------------------------------------------

enum class PerturbKind { Delete, Repeat, Insert, Replace };

std::string_view perturb_kind_name(PerturbKind kind);
PerturbKind parse_perturb_kind(std::string_view name);

struct PerturbSpec {
  PerturbKind kind = PerturbKind::Delete;
  double scale = 0.15;
  std::uint64_t seed = 0;
};

/// Number of affected tokens: max(1, round(scale * n_tokens)).
std::size_t perturb_count(std::size_t n_tokens, double scale);

/// Applies one perturbation at seeded positions. Sentence and entity spans are
/// re-indexed; entities losing any token to Delete are dropped, and sentences
/// left empty are removed. Embeddings no longer align with the tokens and are
/// cleared. Insert and Replace draw from `vocab` (the document's own tokens
/// when empty).
Document perturb(const Document& doc, const PerturbSpec& spec,
                 std::span<const std::string> vocab);

/// Sorted unique tokens of a corpus.
std::vector<std::string> corpus_vocabulary(const std::vector<Document>& docs);

/// Document i uses seed mix_seed(spec.seed, i).
std::vector<Document> perturb_corpus(const std::vector<Document>& docs, const PerturbSpec& spec,
                                     std::size_t threads = 1);

// -- statistic cues --------------------------------------------------------------

/// (human-written, machine-generated) pair.
using DocumentPair = std::pair<Document, Document>;

/// Pairs documents through pair_id (either side may carry it). Every document
/// must land in exactly one mixed-label pair.
std::vector<DocumentPair> pair_documents(const std::vector<Document>& docs);

enum class CueConvention { BestClass, MgtClass };

struct CueEntry {
  std::string token;
  std::size_t applicability = 0;  // pairs where the token occurs in exactly one member
  std::size_t mgt_exclusive = 0;
  std::size_t hwt_exclusive = 0;
  std::optional<double> productivity;  // undefined when applicability = 0
  double coverage = 0.0;
};

struct CueStats {
  std::size_t n_pairs = 0;
  std::vector<CueEntry> entries;  // productivity desc, applicability desc, token asc
};

/// Productivity and coverage of every token seen in the pairs, restricted to
/// `vocab` when it is non-empty.
CueStats cue_stats(std::span<const DocumentPair> pairs, std::span<const std::string> vocab = {},
                   CueConvention convention = CueConvention::BestClass);

void write_cue_table(std::ostream& out, const CueStats& stats);

/// Fraction of length-n windows whose attributions are all positive.
double ngram_supporter_coverage(std::span<const std::vector<double>> attributions, std::size_t n);

}  // namespace cohdet
