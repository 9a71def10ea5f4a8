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

#include "cohdet/graph_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cohdet/parallel.hpp"

namespace cohdet {
namespace {

using Neighbors = std::vector<std::vector<int>>;

Neighbors neighbor_lists(const Adjacency& a) {
  const int n = static_cast<int>(a.rows());
  Neighbors adj(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u != v && a(u, v) != 0) adj[u].push_back(v);
    }
  }
  return adj;
}

void require_nonempty(const Adjacency& a, const char* what) {
  if (a.rows() == 0) {
    throw StatsError(StatsError::Kind::EmptyGraph, std::string(what) + " of an empty graph");
  }
}

}  // namespace

std::vector<int> degrees(const Adjacency& a) {
  std::vector<int> out(static_cast<std::size_t>(a.rows()), 0);
  for (Eigen::Index u = 0; u < a.rows(); ++u) {
    for (Eigen::Index v = 0; v < a.cols(); ++v) {
      if (u != v && a(u, v) != 0) ++out[u];
    }
  }
  return out;
}

std::size_t edge_count(const Adjacency& a) {
  const auto d = degrees(a);
  return static_cast<std::size_t>(std::accumulate(d.begin(), d.end(), 0)) / 2;
}

double avg_degree(const Adjacency& a) {
  require_nonempty(a, "avg_degree");
  return 2.0 * static_cast<double>(edge_count(a)) / static_cast<double>(a.rows());
}

double lcc_portion(const Adjacency& a) {
  require_nonempty(a, "lcc_portion");
  const auto adj = neighbor_lists(a);
  const int n = static_cast<int>(adj.size());
  std::vector<bool> seen(n, false);
  std::vector<int> stack;
  int largest = 0;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    int size = 0;
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      ++size;
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    largest = std::max(largest, size);
  }
  return static_cast<double>(largest) / n;
}

double avg_clustering(const Adjacency& a) {
  require_nonempty(a, "avg_clustering");
  const auto adj = neighbor_lists(a);
  double total = 0.0;
  for (const auto& nbrs : adj) {
    const std::size_t k = nbrs.size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (a(nbrs[i], nbrs[j]) != 0) ++links;
      }
    }
    total += 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  return total / static_cast<double>(adj.size());
}

CoreDecomposition core_decomposition(const Adjacency& a) {
  // Bucket peeling: vertices sit in bins by remaining degree and are removed
  // from the lowest bin, lowering the degree of heavier neighbours.
  const auto adj = neighbor_lists(a);
  const int n = static_cast<int>(adj.size());
  CoreDecomposition out;
  out.core_numbers.assign(n, 0);
  if (n == 0) return out;

  std::vector<int> deg(n), pos(n);
  std::vector<std::vector<int>> bins;
  for (int v = 0; v < n; ++v) {
    deg[v] = static_cast<int>(adj[v].size());
    if (deg[v] >= static_cast<int>(bins.size())) bins.resize(deg[v] + 1);
    bins[deg[v]].push_back(v);
    pos[v] = static_cast<int>(bins[deg[v]].size()) - 1;
  }
  std::vector<bool> removed(n, false);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    while (!bins[k].empty()) {
      const int v = bins[k].back();
      bins[k].pop_back();
      removed[v] = true;
      out.core_numbers[v] = static_cast<int>(k);
      for (int u : adj[v]) {
        if (removed[u] || deg[u] <= deg[v]) continue;
        auto& from = bins[deg[u]];
        const int moved = from.back();
        from[pos[u]] = moved;
        pos[moved] = pos[u];
        from.pop_back();
        --deg[u];
        bins[deg[u]].push_back(u);
        pos[u] = static_cast<int>(bins[deg[u]].size()) - 1;
      }
    }
  }
  out.degeneracy = *std::max_element(out.core_numbers.begin(), out.core_numbers.end());
  return out;
}

double structure_entropy(const Adjacency& a) {
  const auto d = degrees(a);
  const double total = std::accumulate(d.begin(), d.end(), 0.0);
  if (total == 0.0) return 0.0;
  double e = 0.0;
  for (int k : d) {
    if (k == 0) continue;
    const double p = k / total;
    e -= p * std::log(p);
  }
  return e;
}

GraphStatsReport graph_stats(const Adjacency& a) {
  GraphStatsReport r;
  r.n_nodes = static_cast<std::size_t>(a.rows());
  r.node_degrees = degrees(a);
  r.n_edges = static_cast<std::size_t>(
                  std::accumulate(r.node_degrees.begin(), r.node_degrees.end(), 0)) /
              2;
  if (r.n_nodes > 0) {
    r.avg_degree = avg_degree(a);
    r.lcc_portion = lcc_portion(a);
    r.avg_clustering = avg_clustering(a);
  }
  auto cores = core_decomposition(a);
  r.core_numbers = std::move(cores.core_numbers);
  r.degeneracy = cores.degeneracy;
  r.structure_entropy = structure_entropy(a);
  return r;
}

DegreeHistogram degree_histogram(std::span<const Adjacency> graphs) {
  std::map<int, std::size_t> counts;
  std::size_t n = 0;
  for (const auto& a : graphs) {
    for (int k : degrees(a)) {
      ++counts[k];
      ++n;
    }
  }
  if (n == 0) throw StatsError(StatsError::Kind::EmptyCorpus, "degree histogram of no nodes");
  DegreeHistogram h;
  h.n_nodes = n;
  for (const auto& [k, c] : counts) h.bins[k] = static_cast<double>(c) / static_cast<double>(n);
  return h;
}

double js_divergence(const DegreeHistogram& p, const DegreeHistogram& q) {
  auto mass = [](const DegreeHistogram& h, int k) {
    auto it = h.bins.find(k);
    return it == h.bins.end() ? 0.0 : it->second;
  };
  std::vector<int> support;
  for (const auto& [k, _] : p.bins) support.push_back(k);
  for (const auto& [k, _] : q.bins) support.push_back(k);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  double kl_p = 0.0, kl_q = 0.0;
  for (int k : support) {
    const double pk = mass(p, k);
    const double qk = mass(q, k);
    const double m = 0.5 * (pk + qk);
    if (pk > 0.0) kl_p += pk * std::log(pk / m);
    if (qk > 0.0) kl_q += qk * std::log(qk / m);
  }
  return std::max(0.0, 0.5 * kl_p + 0.5 * kl_q);
}

ClassSummary summarize(std::span<const GraphStatsReport> reports) {
  ClassSummary s;
  s.n_graphs = reports.size();
  std::size_t pooled_nodes = 0;
  for (const auto& r : reports) {
    s.vertices += static_cast<double>(r.n_nodes);
    s.edges += static_cast<double>(r.n_edges);
    s.degeneracy += r.degeneracy;
    s.structure_entropy += r.structure_entropy;
    for (int c : r.core_numbers) s.core_number += c;
    pooled_nodes += r.core_numbers.size();
    if (r.n_nodes == 0) continue;
    ++s.n_nonempty;
    s.avg_degree += r.avg_degree;
    s.lcc_portion += r.lcc_portion;
    s.avg_clustering += r.avg_clustering;
  }
  if (s.n_graphs > 0) {
    const double n = static_cast<double>(s.n_graphs);
    s.vertices /= n;
    s.edges /= n;
    s.degeneracy /= n;
    s.structure_entropy /= n;
  }
  if (s.n_nonempty > 0) {
    const double n = static_cast<double>(s.n_nonempty);
    s.avg_degree /= n;
    s.lcc_portion /= n;
    s.avg_clustering /= n;
  }
  if (pooled_nodes > 0) s.core_number /= static_cast<double>(pooled_nodes);
  return s;
}

CorpusReport corpus_report(std::span<const Adjacency> hwt, std::span<const Adjacency> mgt,
                           std::size_t threads) {
  if (hwt.empty()) throw StatsError(StatsError::Kind::EmptyCorpus, "no human-written graphs");
  if (mgt.empty()) throw StatsError(StatsError::Kind::EmptyCorpus, "no machine-generated graphs");
  CorpusReport r;
  auto compute = [threads](std::span<const Adjacency> gs) {
    std::vector<GraphStatsReport> out(gs.size());
    parallel_for(gs.size(), threads, [&](std::size_t i) { out[i] = graph_stats(gs[i]); });
    return out;
  };
  r.graphs_hwt = compute(hwt);
  r.graphs_mgt = compute(mgt);
  r.hwt = summarize(r.graphs_hwt);
  r.mgt = summarize(r.graphs_mgt);
  r.degree_hwt = degree_histogram(hwt);
  r.degree_mgt = degree_histogram(mgt);
  r.jsd_degree = js_divergence(r.degree_hwt, r.degree_mgt);
  return r;
}

namespace {

nlohmann::ordered_json class_json(std::string_view label, const ClassSummary& s) {
  nlohmann::ordered_json j;
  j["class"] = label;
  j["n_graphs"] = s.n_graphs;
  j["n_nonempty"] = s.n_nonempty;
  j["avg_vertices"] = s.vertices;
  j["avg_edges"] = s.edges;
  j["avg_degree"] = s.avg_degree;
  j["lcc_portion"] = s.lcc_portion;
  j["avg_clustering"] = s.avg_clustering;
  j["avg_degeneracy"] = s.degeneracy;
  j["avg_core_number"] = s.core_number;
  j["structure_entropy"] = s.structure_entropy;
  return j;
}

nlohmann::ordered_json histogram_json(const DegreeHistogram& h) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, m] : h.bins) j[std::to_string(k)] = m;
  return j;
}

}  // namespace

nlohmann::ordered_json report_json(const CorpusReport& report) {
  nlohmann::ordered_json j;
  j["classes"] = {class_json(label_name(Label::HWT), report.hwt),
                  class_json(label_name(Label::MGT), report.mgt)};
  j["jsd_degree"] = report.jsd_degree;
  j["degree_histogram"] = {{"human", histogram_json(report.degree_hwt)},
                           {"machine", histogram_json(report.degree_mgt)}};
  return j;
}

void write_distribution_dump(std::ostream& out, const CorpusReport& report) {
  out << "class\tmetric\tscope\tvalue\n";
  auto emit = [&out](std::string_view label, const std::vector<GraphStatsReport>& graphs) {
    char buf[64];
    auto row = [&](const char* metric, const char* scope, double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << label << '\t' << metric << '\t' << scope << '\t' << buf << '\n';
    };
    for (const auto& g : graphs) {
      if (g.n_nodes > 0) row("degree", "graph", g.avg_degree);
    }
    for (const auto& g : graphs) {
      for (int k : g.node_degrees) row("degree", "node", k);
    }
    for (const auto& g : graphs) {
      for (int c : g.core_numbers) row("core_number", "node", c);
    }
    for (const auto& g : graphs) row("core_number", "graph", g.degeneracy);
    for (const auto& g : graphs) row("entropy", "graph", g.structure_entropy);
  };
  emit(label_name(Label::HWT), report.graphs_hwt);
  emit(label_name(Label::MGT), report.graphs_mgt);
}

}  // namespace cohdet
