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
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cohdet {

enum class Label { HWT, MGT };

std::string_view label_name(Label label);  // "human" / "machine"

/// Half-open token range [token_start, token_end) of one sentence.
struct SentenceSpan {
  int index = 0;
  int token_start = 0;
  int token_end = 0;

  bool operator==(const SentenceSpan&) const = default;
};

struct EntityMention {
  int sentence_index = 0;
  int token_start = 0;
  int token_end = 0;
  std::string surface;
  std::string key;  // entity_key(surface), filled on parse

  bool operator==(const EntityMention&) const = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<SentenceSpan> sentences;
  std::vector<EntityMention> entities;
  Label label = Label::HWT;
  std::optional<std::string> pair_id;
  std::optional<std::vector<double>> doc_embedding;
  std::optional<std::vector<std::vector<double>>> token_embeddings;

  bool operator==(const Document&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind { MalformedRecord, SpanOutOfRange, UnknownLabel, InsufficientClass };

  CorpusError(Kind kind, std::string where, const std::string& message)
      : std::runtime_error(message), kind_(kind), where_(std::move(where)) {}

  Kind kind() const { return kind_; }
  // Line number for MalformedRecord, document id otherwise, label name for
  // InsufficientClass.
  const std::string& where() const { return where_; }

 private:
  Kind kind_;
  std::string where_;
};

/// Case-folded, whitespace-collapsed surface form with leading and trailing
/// punctuation removed. Only ASCII is folded; other bytes pass through.
std::string entity_key(std::string_view surface);

/// Checks the span invariants of an already-built document and fills entity
/// keys. Throws CorpusError(SpanOutOfRange) naming the document id.
void validate_document(Document& doc);

/// Reads newline-delimited JSON records. Blank lines are skipped; unknown
/// fields are ignored. Line numbers in errors are 1-based.
std::vector<Document> parse_corpus(std::istream& in);
std::vector<Document> load_corpus(const std::string& path);

/// One JSON object, no trailing newline. parse_corpus inverts it exactly.
std::string serialize_document(const Document& doc);
void write_corpus(std::ostream& out, const std::vector<Document>& docs);

struct LowResourceSplit {
  std::vector<Document> train;
  std::vector<Document> remainder;
};

/// Draws ceil(n/2) HWT and floor(n/2) MGT documents without replacement.
/// Both halves keep input order.
LowResourceSplit sample_low_resource(const std::vector<Document>& docs, std::size_t n,
                                     std::uint64_t seed);

std::size_t count_label(const std::vector<Document>& docs, Label label);

}  // namespace cohdet
