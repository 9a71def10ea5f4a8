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

#include "cohdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cohdet/parallel.hpp"
#include "cohdet/random.hpp"

namespace cohdet {

EvalReport evaluate(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) {
    throw EvalError(EvalError::Kind::LengthMismatch,
                    "evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw EvalError(EvalError::Kind::LengthMismatch, "evaluate: no samples");
  EvalReport r;
  r.n = labels.size();
  for (std::size_t i = 0; i < r.n; ++i) {
    const bool pred = predictions[i] == Label::MGT;
    const bool gold = labels[i] == Label::MGT;
    if (pred && gold) ++r.tp;
    if (pred && !gold) ++r.fp;
    if (!pred && !gold) ++r.tn;
    if (!pred && gold) ++r.fn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.n);
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                                      : 0.0;
  return r;
}

// -- perturbation ------------------------------------------------------------------

std::string_view perturb_kind_name(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::Delete: return "delete";
    case PerturbKind::Repeat: return "repeat";
    case PerturbKind::Insert: return "insert";
    case PerturbKind::Replace: return "replace";
  }
  return "?";
}

PerturbKind parse_perturb_kind(std::string_view name) {
  for (auto k : {PerturbKind::Delete, PerturbKind::Repeat, PerturbKind::Insert,
                 PerturbKind::Replace}) {
    if (perturb_kind_name(k) == name) return k;
  }
  throw EvalError(EvalError::Kind::BadArgument, "unknown perturbation '" + std::string(name) + "'");
}

std::size_t perturb_count(std::size_t n_tokens, double scale) {
  const auto k = static_cast<std::size_t>(std::llround(scale * static_cast<double>(n_tokens)));
  return std::max<std::size_t>(1, k);
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) text.push_back(' ');
    text += tokens[i];
  }
  return text;
}

Document remove_tokens(const Document& doc, const std::vector<bool>& removed) {
  const std::size_t n = doc.tokens.size();
  // new_index[i]: position of token i after removal (or of the next kept token).
  std::vector<int> new_index(n + 1, 0);
  Document out = doc;
  out.tokens.clear();
  for (std::size_t i = 0; i < n; ++i) {
    new_index[i] = static_cast<int>(out.tokens.size());
    if (!removed[i]) out.tokens.push_back(doc.tokens[i]);
  }
  new_index[n] = static_cast<int>(out.tokens.size());

  std::vector<int> sentence_map(doc.sentences.size(), -1);
  out.sentences.clear();
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& span = doc.sentences[s];
    const int start = new_index[span.token_start];
    const int end = new_index[span.token_end];
    if (start == end) continue;
    sentence_map[s] = static_cast<int>(out.sentences.size());
    out.sentences.push_back({static_cast<int>(out.sentences.size()), start, end});
  }
  out.entities.clear();
  for (const auto& e : doc.entities) {
    bool hit = false;
    for (int t = e.token_start; t < e.token_end; ++t) hit = hit || removed[t];
    if (hit) continue;
    EntityMention m = e;
    m.sentence_index = sentence_map[e.sentence_index];
    m.token_start = new_index[e.token_start];
    m.token_end = new_index[e.token_end];
    out.entities.push_back(std::move(m));
  }
  return out;
}

/// inserted[i] holds the tokens placed right after original token i.
Document insert_tokens(const Document& doc, const std::vector<std::vector<std::string>>& inserted) {
  const std::size_t n = doc.tokens.size();
  std::vector<int> new_index(n, 0);
  Document out = doc;
  out.tokens.clear();
  for (std::size_t i = 0; i < n; ++i) {
    new_index[i] = static_cast<int>(out.tokens.size());
    out.tokens.push_back(doc.tokens[i]);
    for (const auto& t : inserted[i]) out.tokens.push_back(t);
  }
  // A span [s, e) keeps the insertions after its inner tokens; the sentence
  // also absorbs the insertions after its last token.
  auto inner_end = [&](int last) { return new_index[last] + 1; };
  for (auto& span : out.sentences) {
    const int last = span.token_end - 1;
    span.token_start = new_index[span.token_start];
    span.token_end = inner_end(last) + static_cast<int>(inserted[last].size());
  }
  for (auto& e : out.entities) {
    e.token_start = new_index[e.token_start];
    e.token_end = inner_end(e.token_end - 1);
  }
  return out;
}

}  // namespace

Document perturb(const Document& doc, const PerturbSpec& spec,
                 std::span<const std::string> vocab) {
  if (!(spec.scale > 0.0 && spec.scale <= 1.0)) {
    throw EvalError(EvalError::Kind::BadArgument, "perturbation scale must lie in (0, 1]");
  }
  const std::size_t n = doc.tokens.size();
  if (n == 0) {
    throw EvalError(EvalError::Kind::BadArgument, "cannot perturb empty document '" + doc.id + "'");
  }
  Rng rng = make_rng(spec.seed);
  const std::size_t k = perturb_count(n, spec.scale);
  const auto positions = sample_without_replacement(rng, n, k);
  auto draw = [&]() -> const std::string& {
    if (vocab.empty()) return doc.tokens[uniform_index(rng, n)];
    return vocab[uniform_index(rng, vocab.size())];
  };

  Document out;
  switch (spec.kind) {
    case PerturbKind::Delete: {
      std::vector<bool> removed(n, false);
      for (auto p : positions) removed[p] = true;
      out = remove_tokens(doc, removed);
      break;
    }
    case PerturbKind::Repeat:
    case PerturbKind::Insert: {
      std::vector<std::vector<std::string>> inserted(n);
      for (auto p : positions) {
        inserted[p].push_back(spec.kind == PerturbKind::Repeat ? doc.tokens[p] : draw());
      }
      out = insert_tokens(doc, inserted);
      break;
    }
    case PerturbKind::Replace: {
      out = doc;
      for (auto p : positions) out.tokens[p] = draw();
      break;
    }
  }
  out.text = join_tokens(out.tokens);
  out.token_embeddings.reset();
  out.doc_embedding.reset();
  return out;
}

std::vector<std::string> corpus_vocabulary(const std::vector<Document>& docs) {
  std::set<std::string> vocab;
  for (const auto& d : docs) vocab.insert(d.tokens.begin(), d.tokens.end());
  return {vocab.begin(), vocab.end()};
}

std::vector<Document> perturb_corpus(const std::vector<Document>& docs, const PerturbSpec& spec,
                                     std::size_t threads) {
  const auto vocab = corpus_vocabulary(docs);
  std::vector<Document> out(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    PerturbSpec local = spec;
    local.seed = mix_seed(spec.seed, i);
    out[i] = perturb(docs[i], local, vocab);
  });
  return out;
}

// -- statistic cues ----------------------------------------------------------------

std::vector<DocumentPair> pair_documents(const std::vector<Document>& docs) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < docs.size(); ++i) by_id.emplace(docs[i].id, i);
  std::vector<int> partner(docs.size(), -1);
  auto unpaired = [](const std::string& id, const std::string& why) {
    return EvalError(EvalError::Kind::UnpairedDocument, "document '" + id + "': " + why);
  };
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].pair_id) continue;
    auto it = by_id.find(*docs[i].pair_id);
    if (it == by_id.end()) throw unpaired(docs[i].id, "pair_id '" + *docs[i].pair_id + "' not found");
    const std::size_t j = it->second;
    if (docs[i].label == docs[j].label) throw unpaired(docs[i].id, "paired with same label");
    if ((partner[i] != -1 && partner[i] != static_cast<int>(j)) ||
        (partner[j] != -1 && partner[j] != static_cast<int>(i))) {
      throw unpaired(docs[i].id, "paired more than once");
    }
    partner[i] = static_cast<int>(j);
    partner[j] = static_cast<int>(i);
  }
  std::vector<DocumentPair> pairs;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (partner[i] == -1) throw unpaired(docs[i].id, "no partner");
    if (docs[i].label == Label::HWT) pairs.emplace_back(docs[i], docs[partner[i]]);
  }
  return pairs;
}

CueStats cue_stats(std::span<const DocumentPair> pairs, std::span<const std::string> vocab,
                   CueConvention convention) {
  struct Counts {
    std::size_t mgt = 0, hwt = 0;
  };
  std::map<std::string, Counts> counts;
  const std::unordered_set<std::string> allowed(vocab.begin(), vocab.end());
  for (const auto& [hwt, mgt] : pairs) {
    if (hwt.label != Label::HWT || mgt.label != Label::MGT) {
      throw EvalError(EvalError::Kind::UnpairedDocument,
                      "pair (" + hwt.id + ", " + mgt.id + ") is not human/machine");
    }
    const std::set<std::string> h(hwt.tokens.begin(), hwt.tokens.end());
    const std::set<std::string> m(mgt.tokens.begin(), mgt.tokens.end());
    for (const auto& t : h) {
      auto& c = counts[t];
      if (!m.contains(t)) ++c.hwt;
    }
    for (const auto& t : m) {
      auto& c = counts[t];
      if (!h.contains(t)) ++c.mgt;
    }
  }
  CueStats stats;
  stats.n_pairs = pairs.size();
  for (const auto& [token, c] : counts) {
    if (!allowed.empty() && !allowed.contains(token)) continue;
    CueEntry e;
    e.token = token;
    e.mgt_exclusive = c.mgt;
    e.hwt_exclusive = c.hwt;
    e.applicability = c.mgt + c.hwt;
    if (e.applicability > 0) {
      const std::size_t hits =
          convention == CueConvention::BestClass ? std::max(c.mgt, c.hwt) : c.mgt;
      e.productivity = static_cast<double>(hits) / static_cast<double>(e.applicability);
    }
    e.coverage = stats.n_pairs > 0
                     ? static_cast<double>(e.applicability) / static_cast<double>(stats.n_pairs)
                     : 0.0;
    stats.entries.push_back(std::move(e));
  }
  std::stable_sort(stats.entries.begin(), stats.entries.end(),
                   [](const CueEntry& a, const CueEntry& b) {
                     const double pa = a.productivity.value_or(-1.0);
                     const double pb = b.productivity.value_or(-1.0);
                     if (pa != pb) return pa > pb;
                     if (a.applicability != b.applicability) return a.applicability > b.applicability;
                     return a.token < b.token;
                   });
  return stats;
}

void write_cue_table(std::ostream& out, const CueStats& stats) {
  out << "token\tapplicability\tproductivity\tcoverage\n";
  char buf[64];
  for (const auto& e : stats.entries) {
    out << e.token << '\t' << e.applicability << '\t';
    if (e.productivity) {
      std::snprintf(buf, sizeof buf, "%.6f", *e.productivity);
      out << buf;
    } else {
      out << '-';
    }
    std::snprintf(buf, sizeof buf, "%.6f", e.coverage);
    out << '\t' << buf << '\n';
  }
}

double ngram_supporter_coverage(std::span<const std::vector<double>> attributions, std::size_t n) {
  if (n == 0) throw EvalError(EvalError::Kind::BadArgument, "n-gram length must be >= 1");
  std::size_t supporters = 0;
  std::size_t windows = 0;
  for (const auto& seq : attributions) {
    if (seq.size() < n) continue;
    std::size_t run = 0;  // positive entries ending at i
    for (std::size_t i = 0; i < seq.size(); ++i) {
      run = seq[i] > 0.0 ? run + 1 : 0;
      if (i + 1 >= n) {
        ++windows;
        if (run >= n) ++supporters;
      }
    }
  }
  if (windows == 0) {
    throw EvalError(EvalError::Kind::NoWindows,
                    "no sequence holds a window of length " + std::to_string(n));
  }
  return static_cast<double>(supporters) / static_cast<double>(windows);
}

}  // namespace cohdet
