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

#include "cohdet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string_view>

namespace cohdet {
namespace {

constexpr std::array<std::string_view, 16> kNames = {
    "Alice",  "Berlin", "Mercer", "Oslo",   "Dana",  "Kestrel", "Novak",  "Tamsin",
    "Quill",  "Harbor", "Ibarra", "Lund",   "Perez", "Sutton",  "Vashti", "Yardley"};
constexpr std::array<std::string_view, 12> kShared = {
    "the", "of", "and", "a", "to", "in", "was", "with", "for", "on", "that", "by"};
constexpr std::array<std::string_view, 12> kHumanWords = {
    "gritty", "muddy",  "crooked", "sighed", "drizzle", "hunch",
    "scrawl", "tangle", "lurch",   "ragged", "murmur",  "nook"};
constexpr std::array<std::string_view, 12> kMachineWords = {
    "furthermore", "notably", "overall", "significant", "various",    "additionally",
    "crucial",     "ensure",  "enhance", "robust",      "comprehensive", "pivotal"};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return std::string(words[uniform_index(rng, N)]);
}

std::size_t in_range(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + uniform_index(rng, hi - lo + 1);
}

// One sentence: the mention token groups interleaved with filler, ended by a
// full stop.
SentenceDraft lay_out(Rng& rng, const std::vector<std::vector<std::string>>& mentions,
                      std::vector<std::string> filler) {
  std::vector<int> order;  // -1: filler, >= 0: mention index
  for (std::size_t i = 0; i < filler.size(); ++i) order.push_back(-1);
  for (std::size_t i = 0; i < mentions.size(); ++i) order.push_back(static_cast<int>(i));
  shuffle(order, rng);
  SentenceDraft s;
  std::size_t next_filler = 0;
  for (int slot : order) {
    if (slot < 0) {
      s.tokens.push_back(filler[next_filler++]);
      continue;
    }
    const auto& m = mentions[static_cast<std::size_t>(slot)];
    s.mentions.push_back({static_cast<int>(s.tokens.size()), static_cast<int>(m.size())});
    s.tokens.insert(s.tokens.end(), m.begin(), m.end());
  }
  s.tokens.push_back(".");
  return s;
}

std::string variant(Rng& rng, std::string name) {
  switch (uniform_index(rng, 4)) {
    case 0:
      std::transform(name.begin(), name.end(), name.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      return name;
    case 1:
      return name + ",";
    case 2:
      return "\"" + name;
    default:
      return name;
  }
}

struct Vocabulary {
  double own = 1.0;    // probability of an own-class filler word
  double other = 0.0;  // probability of an other-class filler word
};

std::string filler_word(Rng& rng, Label label, const Vocabulary& vocab) {
  const double u = uniform01(rng);
  const bool human = label == Label::HWT;
  if (u < vocab.own) return pick(rng, human ? kHumanWords : kMachineWords);
  if (u < vocab.own + vocab.other) return pick(rng, human ? kMachineWords : kHumanWords);
  return pick(rng, kShared);
}

// Entities recur across 2-4 sentences with probability `recurrence`, else
// appear once.
std::vector<SentenceDraft> entity_document(Rng& rng, std::size_t n_sentences,
                                           std::size_t n_entities, double recurrence,
                                           Label label, const Vocabulary& vocab) {
  std::vector<std::vector<std::vector<std::string>>> per_sentence(n_sentences);
  std::vector<std::size_t> names(kNames.size());
  for (std::size_t i = 0; i < names.size(); ++i) names[i] = i;
  shuffle(names, rng);
  for (std::size_t e = 0; e < n_entities; ++e) {
    const std::string name(kNames[names[e % names.size()]]);
    std::size_t occurrences = 1;
    if (uniform01(rng) < recurrence) occurrences = std::min(n_sentences, in_range(rng, 2, 4));
    for (auto s : sample_without_replacement(rng, n_sentences, occurrences)) {
      per_sentence[s].push_back({name});
    }
  }
  std::vector<SentenceDraft> drafts;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    std::vector<std::string> filler;
    const std::size_t n_filler = in_range(rng, 4, 8);
    for (std::size_t i = 0; i < n_filler; ++i) filler.push_back(filler_word(rng, label, vocab));
    drafts.push_back(lay_out(rng, per_sentence[s], std::move(filler)));
  }
  return drafts;
}

}  // namespace

Document assemble_document(std::string id, Label label, const std::vector<SentenceDraft>& drafts) {
  Document doc;
  doc.id = std::move(id);
  doc.label = label;
  for (std::size_t s = 0; s < drafts.size(); ++s) {
    const int start = static_cast<int>(doc.tokens.size());
    const auto& d = drafts[s];
    for (const auto& m : d.mentions) {
      EntityMention em;
      em.sentence_index = static_cast<int>(s);
      em.token_start = start + m.start;
      em.token_end = start + m.start + m.length;
      for (int t = m.start; t < m.start + m.length; ++t) {
        if (!em.surface.empty()) em.surface += ' ';
        em.surface += d.tokens[static_cast<std::size_t>(t)];
      }
      doc.entities.push_back(std::move(em));
    }
    doc.tokens.insert(doc.tokens.end(), d.tokens.begin(), d.tokens.end());
    doc.sentences.push_back({static_cast<int>(s), start, static_cast<int>(doc.tokens.size())});
  }
  for (const auto& t : doc.tokens) {
    if (!doc.text.empty()) doc.text += ' ';
    doc.text += t;
  }
  validate_document(doc);
  return doc;
}

Document random_document(Rng& rng, const RandomDocumentOptions& options, std::string id) {
  const std::size_t n_sentences = uniform_index(rng, options.max_sentences + 1);
  std::vector<std::vector<std::vector<std::string>>> per_sentence(n_sentences);
  if (n_sentences > 0) {
    const std::size_t n_mentions = uniform_index(rng, options.max_mentions + 1);
    const std::size_t pool = std::min<std::size_t>(options.entity_pool, kNames.size());
    for (std::size_t m = 0; m < n_mentions; ++m) {
      std::string name(kNames[uniform_index(rng, pool)]);
      if (options.surface_variants) name = variant(rng, name);
      std::vector<std::string> tokens{name};
      // Occasional two-token mention with its own key.
      if (uniform01(rng) < 0.15) tokens.push_back(pick(rng, kNames));
      per_sentence[uniform_index(rng, n_sentences)].push_back(std::move(tokens));
    }
  }
  std::vector<SentenceDraft> drafts;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    std::vector<std::string> filler;
    const std::size_t n_filler = uniform_index(rng, options.max_filler + 1);
    for (std::size_t i = 0; i < n_filler; ++i) filler.push_back(pick(rng, kShared));
    drafts.push_back(lay_out(rng, per_sentence[s], std::move(filler)));
  }
  const Label label = uniform01(rng) < 0.5 ? Label::HWT : Label::MGT;
  return assemble_document(std::move(id), label, drafts);
}

std::vector<Document> coherence_corpus(const CoherenceCorpusOptions& options) {
  Rng rng = make_rng(options.seed);
  std::vector<Document> docs;
  docs.reserve(options.n_docs);
  const std::string prefix(label_name(options.label));
  for (std::size_t i = 0; i < options.n_docs; ++i) {
    const std::size_t n_sentences = in_range(rng, options.min_sentences, options.max_sentences);
    const std::size_t n_entities = in_range(rng, options.min_entities, options.max_entities);
    auto drafts = entity_document(rng, n_sentences, n_entities, options.recurrence, options.label,
                                  Vocabulary{0.0, 0.0});
    docs.push_back(assemble_document(prefix + "-" + std::to_string(i), options.label, drafts));
  }
  return docs;
}

std::vector<Document> separable_corpus(const SeparableCorpusOptions& options) {
  Rng rng = make_rng(options.seed);
  std::vector<Document> docs;
  docs.reserve(options.n_docs);
  for (std::size_t i = 0; i < options.n_docs; ++i) {
    const Label label = i % 2 == 0 ? Label::HWT : Label::MGT;
    const bool hard = uniform01(rng) < options.hard_fraction;
    const Vocabulary vocab = hard ? Vocabulary{0.42, 0.38} : Vocabulary{0.8, 0.0};
    double recurrence = label == Label::HWT ? 0.7 : 0.2;
    if (hard) recurrence = 0.45;
    const std::size_t n_sentences = in_range(rng, 4, 8);
    const std::size_t n_entities = in_range(rng, 3, 6);
    auto drafts = entity_document(rng, n_sentences, n_entities, recurrence, label, vocab);
    docs.push_back(assemble_document("doc-" + std::to_string(i), label, drafts));
  }
  return docs;
}

}  // namespace cohdet
