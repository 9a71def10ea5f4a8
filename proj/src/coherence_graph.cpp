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

#include "cohdet/coherence_graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

namespace cohdet {

std::string_view rel_name(RelKind rel) { return rel == RelKind::Inner ? "inner" : "inter"; }

GraphLimits GraphLimits::uncapped() {
  return {std::numeric_limits<std::size_t>::max(), std::numeric_limits<std::size_t>::max()};
}

CoherenceGraph build_graph(const Document& doc, const GraphLimits& limits) {
  CoherenceGraph g;
  g.doc_id = doc.id;
  g.n_sentences = std::min(doc.sentences.size(), limits.max_sentences);

  std::vector<int> order;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) {
    if (static_cast<std::size_t>(doc.entities[i].sentence_index) < g.n_sentences) {
      order.push_back(static_cast<int>(i));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ea = doc.entities[a];
    const auto& eb = doc.entities[b];
    if (ea.sentence_index != eb.sentence_index) return ea.sentence_index < eb.sentence_index;
    return ea.token_start < eb.token_start;
  });
  if (order.size() > limits.max_nodes) order.resize(limits.max_nodes);

  for (int idx : order) {
    const auto& e = doc.entities[idx];
    g.nodes.push_back({e.sentence_index, idx, e.token_start,
                       e.key.empty() ? entity_key(e.surface) : e.key});
  }

  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  g.inner = Adjacency::Zero(n, n);
  g.inter = Adjacency::Zero(n, n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const auto& a = g.nodes[u];
      const auto& b = g.nodes[v];
      if (a.sentence == b.sentence) {
        g.edges.push_back({u, v, RelKind::Inner});
        g.inner(u, v) = g.inner(v, u) = 1;
      } else if (a.key == b.key) {
        g.edges.push_back({u, v, RelKind::Inter});
        g.inter(u, v) = g.inter(v, u) = 1;
      }
    }
  }
  return g;
}

Adjacency merged_adjacency(const CoherenceGraph& g) {
  return (g.inner.array() + g.inter.array()).min(1).matrix();
}

std::string graph_record(const CoherenceGraph& g) {
  nlohmann::ordered_json j;
  j["id"] = g.doc_id;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& node : g.nodes) {
    nodes.push_back({{"sentence", node.sentence}, {"start", node.token_start}, {"key", node.key}});
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges) edges.push_back({e.u, e.v, rel_name(e.rel)});
  j["edges"] = std::move(edges);
  return j.dump();
}

}  // namespace cohdet
