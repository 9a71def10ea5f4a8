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

// Reference implementations used only by the tests. They follow the textbook
// definitions directly and share no code with the library beyond the data
// types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "cohdet/coherence_graph.hpp"
#include "cohdet/corpus.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<bool>>;

// -- graph construction --------------------------------------------------------

// (sentence, token_start, token_end) of the lower and higher mention, relation.
using EdgeKey = std::tuple<int, int, int, int, int, int, int>;

/// Mentions kept under the limits, in reading order.
inline std::vector<const cohdet::EntityMention*> kept_mentions(const cohdet::Document& doc,
                                                               const cohdet::GraphLimits& limits) {
  std::vector<const cohdet::EntityMention*> kept;
  for (const auto& m : doc.entities) {
    if (static_cast<std::size_t>(m.sentence_index) < limits.max_sentences) kept.push_back(&m);
  }
  std::stable_sort(kept.begin(), kept.end(), [](auto* a, auto* b) {
    return std::tie(a->sentence_index, a->token_start) < std::tie(b->sentence_index, b->token_start);
  });
  if (kept.size() > limits.max_nodes) kept.resize(limits.max_nodes);
  return kept;
}

/// Case rule evaluated on every unordered pair: same sentence -> inner (0),
/// same entity in different sentences -> inter (1), otherwise no edge.
inline std::set<EdgeKey> literal_edges(const cohdet::Document& doc,
                                       const cohdet::GraphLimits& limits) {
  const auto kept = kept_mentions(doc, limits);
  std::set<EdgeKey> edges;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (i >= j) continue;
      const auto& a = *kept[i];
      const auto& b = *kept[j];
      int rel = -1;
      if (a.sentence_index == b.sentence_index) {
        rel = 0;
      } else if (cohdet::entity_key(a.surface) == cohdet::entity_key(b.surface)) {
        rel = 1;
      }
      if (rel >= 0) {
        edges.emplace(a.sentence_index, a.token_start, a.token_end, b.sentence_index,
                      b.token_start, b.token_end, rel);
      }
    }
  }
  return edges;
}

// -- graph statistics -------------------------------------------------------------

inline Matrix to_matrix(const Eigen::MatrixXi& a) {
  Matrix m(a.rows(), std::vector<bool>(a.cols(), false));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) m[i][j] = a(i, j) != 0;
  }
  return m;
}

inline std::vector<int> degrees(const Matrix& a) {
  std::vector<int> d(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) d[i] += (i != j && a[i][j]) ? 1 : 0;
  }
  return d;
}

inline double avg_degree(const Matrix& a) {
  double total = 0;
  for (int d : degrees(a)) total += d;
  return a.empty() ? 0.0 : total / static_cast<double>(a.size());
}

inline double avg_clustering(const Matrix& a) {
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::size_t> nb;
    for (std::size_t u = 0; u < n; ++u) {
      if (u != v && a[v][u]) nb.push_back(u);
    }
    if (nb.size() < 2) continue;
    double links = 0.0;
    for (std::size_t x = 0; x < nb.size(); ++x) {
      for (std::size_t y = x + 1; y < nb.size(); ++y) links += a[nb[x]][nb[y]] ? 1.0 : 0.0;
    }
    total += 2.0 * links / static_cast<double>(nb.size() * (nb.size() - 1));
  }
  return total / static_cast<double>(n);
}

/// Largest component share via repeated label propagation.
inline double lcc_portion(const Matrix& a) {
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  std::vector<std::size_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (a[i][j] && comp[j] < comp[i]) {
          comp[i] = comp[j];
          changed = true;
        }
      }
    }
  }
  std::vector<std::size_t> size(n, 0);
  for (auto c : comp) ++size[c];
  return static_cast<double>(*std::max_element(size.begin(), size.end())) /
         static_cast<double>(n);
}

/// core(v) = largest k such that v survives in the k-core, where the k-core
/// is found by deleting nodes of degree < k until none is left.
inline std::vector<int> core_numbers(const Matrix& a) {
  const std::size_t n = a.size();
  std::vector<int> core(n, 0);
  for (int k = 1; k <= static_cast<int>(n); ++k) {
    std::vector<bool> alive(n, true);
    bool removed = true;
    while (removed) {
      removed = false;
      for (std::size_t v = 0; v < n; ++v) {
        if (!alive[v]) continue;
        int d = 0;
        for (std::size_t u = 0; u < n; ++u) d += (u != v && alive[u] && a[v][u]) ? 1 : 0;
        if (d < k) {
          alive[v] = false;
          removed = true;
        }
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (alive[v]) core[v] = k;
    }
  }
  return core;
}

/// -sum I_i ln I_i with I_i = k_i / sum_j k_j, over nodes with k_i > 0.
inline double structure_entropy(const Matrix& a) {
  const auto d = degrees(a);
  double total = 0.0;
  for (int k : d) total += k;
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (int k : d) {
    if (k == 0) continue;
    const double p = k / total;
    h -= p * std::log(p);
  }
  return h;
}

// -- contrastive loss ---------------------------------------------------------------

/// Supervised contrastive loss against a memory bank, unweighted:
///   L_i = -sum_{p in P(i)} log( exp(q_i.k_p / tau) / sum_{a} exp(q_i.k_a / tau) )
/// averaged over the queries. Every query must have a positive and a negative.
inline double supervised_contrastive(const Eigen::MatrixXd& queries, std::span<const int> qy,
                                     const Eigen::MatrixXd& keys, std::span<const int> ky,
                                     double tau) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    double denom = 0.0;
    for (Eigen::Index a = 0; a < keys.rows(); ++a) {
      double dot = 0.0;
      for (Eigen::Index f = 0; f < keys.cols(); ++f) dot += queries(i, f) * keys(a, f);
      denom += std::exp(dot / tau);
    }
    for (Eigen::Index p = 0; p < keys.rows(); ++p) {
      if (ky[p] != qy[i]) continue;
      double dot = 0.0;
      for (Eigen::Index f = 0; f < keys.cols(); ++f) dot += queries(i, f) * keys(p, f);
      total -= std::log(std::exp(dot / tau) / denom);
    }
  }
  return total / static_cast<double>(queries.rows());
}

// -- n-gram supporter coverage ----------------------------------------------------

/// Enumerates every window and checks all its entries.
inline double supporter_coverage(const std::vector<std::vector<double>>& rows, std::size_t n) {
  std::size_t windows = 0, positive = 0;
  for (const auto& r : rows) {
    for (std::size_t s = 0; s + n <= r.size(); ++s) {
      ++windows;
      bool all = true;
      for (std::size_t t = s; t < s + n; ++t) all = all && r[t] > 0.0;
      positive += all ? 1 : 0;
    }
  }
  return windows == 0 ? -1.0 : static_cast<double>(positive) / static_cast<double>(windows);
}

}  // namespace oracle
