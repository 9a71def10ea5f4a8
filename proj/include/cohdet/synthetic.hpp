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
#include <string>
#include <vector>

#include "cohdet/corpus.hpp"
#include "cohdet/random.hpp"

namespace cohdet {

// Seeded document generators for tests, benchmarks and demos.

/// Token-level draft of one sentence; mentions are [start, start + length)
/// ranges local to the sentence.
struct SentenceDraft {
  struct Mention {
    int start = 0;
    int length = 1;
  };
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;
};

/// Lays the drafts out as one validated document (text = tokens joined by
/// spaces).
Document assemble_document(std::string id, Label label, const std::vector<SentenceDraft>& drafts);

struct RandomDocumentOptions {
  std::size_t max_sentences = 10;
  std::size_t max_mentions = 20;
  std::size_t max_filler = 8;      // filler tokens per sentence
  std::size_t entity_pool = 6;     // distinct entities the mentions draw from
  bool surface_variants = true;    // case and punctuation variants of a name
};

/// Arbitrary small document: random sentence count (possibly zero mentions,
/// possibly empty sentences of filler), mentions drawn from a small entity
/// pool so that keys collide often.
Document random_document(Rng& rng, const RandomDocumentOptions& options, std::string id);

struct CoherenceCorpusOptions {
  std::size_t n_docs = 300;
  double recurrence = 0.7;  // probability an entity recurs in >= 2 sentences
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 10;
  std::size_t min_entities = 4;
  std::size_t max_entities = 7;
  Label label = Label::HWT;
  std::uint64_t seed = 0;
};

/// Documents whose entities recur across sentences with the given probability.
std::vector<Document> coherence_corpus(const CoherenceCorpusOptions& options);

struct SeparableCorpusOptions {
  std::size_t n_docs = 200;
  // Fraction of documents drawn near the decision boundary: their filler
  // vocabulary and entity recurrence are mixed between the classes.
  double hard_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Balanced labeled corpus (labels alternate, HWT first). Human documents use
/// their own filler vocabulary and recurring entities, machine documents a
/// disjoint vocabulary and mostly one-off entities.
std::vector<Document> separable_corpus(const SeparableCorpusOptions& options);

}  // namespace cohdet
