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
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohdet/coherence_graph.hpp"

namespace cohdet {

// Static geometric statistics of coherence graphs. Every function reads the
// merged (relation-agnostic) adjacency; the CoherenceGraph overloads merge
// first.

class StatsError : public std::runtime_error {
 public:
  enum class Kind { EmptyGraph, EmptyCorpus };
  StatsError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Probability mass per integer degree over pooled nodes.
struct DegreeHistogram {
  std::map<int, double> bins;
  std::size_t n_nodes = 0;
};

struct CoreDecomposition {
  std::vector<int> core_numbers;
  int degeneracy = 0;
};

struct GraphStatsReport {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double avg_degree = 0.0;      // 0 for the empty graph
  double lcc_portion = 0.0;     // 0 for the empty graph
  double avg_clustering = 0.0;  // 0 for the empty graph
  std::vector<int> node_degrees;
  std::vector<int> core_numbers;
  int degeneracy = 0;
  double structure_entropy = 0.0;  // nats
};

std::vector<int> degrees(const Adjacency& a);
std::size_t edge_count(const Adjacency& a);

double avg_degree(const Adjacency& a);
double lcc_portion(const Adjacency& a);
double avg_clustering(const Adjacency& a);
CoreDecomposition core_decomposition(const Adjacency& a);
double structure_entropy(const Adjacency& a);
GraphStatsReport graph_stats(const Adjacency& a);

inline double avg_degree(const CoherenceGraph& g) { return avg_degree(merged_adjacency(g)); }
inline double lcc_portion(const CoherenceGraph& g) { return lcc_portion(merged_adjacency(g)); }
inline double avg_clustering(const CoherenceGraph& g) { return avg_clustering(merged_adjacency(g)); }
inline CoreDecomposition core_decomposition(const CoherenceGraph& g) {
  return core_decomposition(merged_adjacency(g));
}
inline double structure_entropy(const CoherenceGraph& g) {
  return structure_entropy(merged_adjacency(g));
}
inline GraphStatsReport graph_stats(const CoherenceGraph& g) {
  return graph_stats(merged_adjacency(g));
}

/// Empty graphs are skipped. Throws EmptyCorpus when no node remains.
DegreeHistogram degree_histogram(std::span<const Adjacency> graphs);

/// Jensen-Shannon divergence in nats over the union support.
double js_divergence(const DegreeHistogram& p, const DegreeHistogram& q);

/// Per-class means. avg_degree, lcc_portion and avg_clustering average over
/// non-empty graphs; the remaining fields average over all graphs.
struct ClassSummary {
  std::size_t n_graphs = 0;
  std::size_t n_nonempty = 0;
  double vertices = 0.0;
  double edges = 0.0;
  double avg_degree = 0.0;
  double lcc_portion = 0.0;
  double avg_clustering = 0.0;
  double degeneracy = 0.0;
  double core_number = 0.0;  // pooled over nodes
  double structure_entropy = 0.0;
};

struct CorpusReport {
  ClassSummary hwt;
  ClassSummary mgt;
  double jsd_degree = 0.0;
  DegreeHistogram degree_hwt;
  DegreeHistogram degree_mgt;
  std::vector<GraphStatsReport> graphs_hwt;
  std::vector<GraphStatsReport> graphs_mgt;
};

ClassSummary summarize(std::span<const GraphStatsReport> reports);

CorpusReport corpus_report(std::span<const Adjacency> hwt, std::span<const Adjacency> mgt,
                           std::size_t threads = 1);

nlohmann::ordered_json report_json(const CorpusReport& report);

/// Tab-separated columns `class metric scope value`, one value per row.
/// Node-scoped rows pool nodes; graph-scoped rows hold one value per graph.
void write_distribution_dump(std::ostream& out, const CorpusReport& report);

}  // namespace cohdet
