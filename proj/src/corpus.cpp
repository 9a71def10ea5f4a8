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

#include "cohdet/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cohdet/random.hpp"

namespace cohdet {
namespace {

using nlohmann::json;

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw CorpusError(CorpusError::Kind::MalformedRecord, std::to_string(line),
                    "line " + std::to_string(line) + ": malformed record: " + what);
}

[[noreturn]] void out_of_range(const std::string& id, const std::string& what) {
  throw CorpusError(CorpusError::Kind::SpanOutOfRange, id,
                    "document '" + id + "': span out of range: " + what);
}

int as_index(const json& j, std::size_t line, const char* field) {
  if (!j.is_number_integer()) malformed(line, std::string(field) + " must be an integer");
  return j.get<int>();
}

std::vector<double> as_vector(const json& j, std::size_t line, const char* field) {
  if (!j.is_array()) malformed(line, std::string(field) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) malformed(line, std::string(field) + " must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) malformed(line, std::string("missing field '") + field + "'");
  return *it;
}

Document parse_record(const json& obj, std::size_t line) {
  if (!obj.is_object()) malformed(line, "record is not an object");
  Document doc;

  const json& id = require(obj, "id", line);
  const json& text = require(obj, "text", line);
  if (!id.is_string()) malformed(line, "id must be a string");
  if (!text.is_string()) malformed(line, "text must be a string");
  doc.id = id.get<std::string>();
  doc.text = text.get<std::string>();

  const json& tokens = require(obj, "tokens", line);
  if (!tokens.is_array()) malformed(line, "tokens must be an array");
  for (const auto& t : tokens) {
    if (!t.is_string()) malformed(line, "tokens must be strings");
    doc.tokens.push_back(t.get<std::string>());
  }

  const json& sentences = require(obj, "sentences", line);
  if (!sentences.is_array()) malformed(line, "sentences must be an array");
  int index = 0;
  for (const auto& s : sentences) {
    if (!s.is_array() || s.size() != 2) malformed(line, "sentence must be a [start,end] pair");
    doc.sentences.push_back(
        {index++, as_index(s[0], line, "sentence start"), as_index(s[1], line, "sentence end")});
  }

  const json& entities = require(obj, "entities", line);
  if (!entities.is_array()) malformed(line, "entities must be an array");
  for (const auto& e : entities) {
    if (!e.is_object()) malformed(line, "entity must be an object");
    EntityMention m;
    m.sentence_index = as_index(require(e, "sentence", line), line, "entity sentence");
    m.token_start = as_index(require(e, "start", line), line, "entity start");
    m.token_end = as_index(require(e, "end", line), line, "entity end");
    const json& surface = require(e, "surface", line);
    if (!surface.is_string() || surface.get<std::string>().empty()) {
      malformed(line, "entity surface must be a non-empty string");
    }
    m.surface = surface.get<std::string>();
    doc.entities.push_back(std::move(m));
  }

  const json& label = require(obj, "label", line);
  if (!label.is_string()) malformed(line, "label must be a string");
  if (label == "human") {
    doc.label = Label::HWT;
  } else if (label == "machine") {
    doc.label = Label::MGT;
  } else {
    throw CorpusError(CorpusError::Kind::UnknownLabel, doc.id,
                      "document '" + doc.id + "': unknown label '" + label.get<std::string>() +
                          "'");
  }

  if (auto it = obj.find("pair_id"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) malformed(line, "pair_id must be a string");
    doc.pair_id = it->get<std::string>();
  }
  if (auto it = obj.find("doc_embedding"); it != obj.end() && !it->is_null()) {
    doc.doc_embedding = as_vector(*it, line, "doc_embedding");
  }
  if (auto it = obj.find("token_embeddings"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) malformed(line, "token_embeddings must be an array");
    std::vector<std::vector<double>> rows;
    for (const auto& row : *it) rows.push_back(as_vector(row, line, "token_embeddings"));
    if (rows.size() != doc.tokens.size()) {
      malformed(line, "token_embeddings has " + std::to_string(rows.size()) +
                          " rows for " + std::to_string(doc.tokens.size()) + " tokens");
    }
    for (const auto& row : rows) {
      if (row.size() != rows.front().size()) malformed(line, "ragged token_embeddings");
    }
    doc.token_embeddings = std::move(rows);
  }
  return doc;
}

}  // namespace

std::string_view label_name(Label label) { return label == Label::HWT ? "human" : "machine"; }

std::string entity_key(std::string_view surface) {
  std::string collapsed;
  collapsed.reserve(surface.size());
  bool pending_space = false;
  for (unsigned char c : surface) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !collapsed.empty()) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
  }
  auto strip = [](unsigned char c) { return is_space(c) || is_punct(c); };
  std::size_t begin = 0;
  std::size_t end = collapsed.size();
  while (begin < end && strip(collapsed[begin])) ++begin;
  while (end > begin && strip(collapsed[end - 1])) --end;
  if (begin == end) return collapsed;  // all punctuation: keep the folded form
  return collapsed.substr(begin, end - begin);
}

void validate_document(Document& doc) {
  const int n_tokens = static_cast<int>(doc.tokens.size());
  int prev_end = 0;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const auto& s = doc.sentences[i];
    if (s.index != static_cast<int>(i)) out_of_range(doc.id, "sentence index mismatch");
    if (s.token_start < prev_end || s.token_start >= s.token_end || s.token_end > n_tokens) {
      out_of_range(doc.id, "sentence " + std::to_string(i) + " [" +
                               std::to_string(s.token_start) + "," +
                               std::to_string(s.token_end) + ")");
    }
    prev_end = s.token_end;
  }
  for (auto& e : doc.entities) {
    if (e.sentence_index < 0 || e.sentence_index >= static_cast<int>(doc.sentences.size())) {
      out_of_range(doc.id, "entity '" + e.surface + "' names sentence " +
                               std::to_string(e.sentence_index));
    }
    const auto& s = doc.sentences[e.sentence_index];
    if (e.token_start >= e.token_end || e.token_start < s.token_start ||
        e.token_end > s.token_end) {
      out_of_range(doc.id, "entity '" + e.surface + "' [" + std::to_string(e.token_start) + "," +
                               std::to_string(e.token_end) + ") outside sentence " +
                               std::to_string(e.sentence_index));
    }
    e.key = entity_key(e.surface);
  }
}

std::vector<Document> parse_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return is_space(c); })) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      malformed(line_no, e.what());
    }
    Document doc = parse_record(obj, line_no);
    validate_document(doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus '" + path + "'");
  return parse_corpus(in);
}

std::string serialize_document(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["tokens"] = doc.tokens;
  auto sentences = nlohmann::ordered_json::array();
  for (const auto& s : doc.sentences) sentences.push_back({s.token_start, s.token_end});
  j["sentences"] = std::move(sentences);
  auto entities = nlohmann::ordered_json::array();
  for (const auto& e : doc.entities) {
    entities.push_back({{"sentence", e.sentence_index},
                        {"start", e.token_start},
                        {"end", e.token_end},
                        {"surface", e.surface}});
  }
  j["entities"] = std::move(entities);
  j["label"] = label_name(doc.label);
  if (doc.pair_id) j["pair_id"] = *doc.pair_id;
  if (doc.doc_embedding) j["doc_embedding"] = *doc.doc_embedding;
  if (doc.token_embeddings) j["token_embeddings"] = *doc.token_embeddings;
  return j.dump();
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << serialize_document(d) << '\n';
}

std::size_t count_label(const std::vector<Document>& docs, Label label) {
  return static_cast<std::size_t>(
      std::count_if(docs.begin(), docs.end(), [&](const Document& d) { return d.label == label; }));
}

LowResourceSplit sample_low_resource(const std::vector<Document>& docs, std::size_t n,
                                     std::uint64_t seed) {
  const std::size_t need_hwt = (n + 1) / 2;
  const std::size_t need_mgt = n / 2;
  std::vector<std::size_t> hwt, mgt;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    (docs[i].label == Label::HWT ? hwt : mgt).push_back(i);
  }
  auto check = [](Label label, std::size_t have, std::size_t need) {
    if (have < need) {
      throw CorpusError(CorpusError::Kind::InsufficientClass, std::string(label_name(label)),
                        "insufficient " + std::string(label_name(label)) + " documents: have " +
                            std::to_string(have) + ", need " + std::to_string(need));
    }
  };
  check(Label::HWT, hwt.size(), need_hwt);
  check(Label::MGT, mgt.size(), need_mgt);

  Rng rng = make_rng(seed);
  shuffle(hwt, rng);
  shuffle(mgt, rng);
  std::vector<bool> chosen(docs.size(), false);
  for (std::size_t i = 0; i < need_hwt; ++i) chosen[hwt[i]] = true;
  for (std::size_t i = 0; i < need_mgt; ++i) chosen[mgt[i]] = true;

  LowResourceSplit split;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    (chosen[i] ? split.train : split.remainder).push_back(docs[i]);
  }
  return split;
}

}  // namespace cohdet
