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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cohdet/corpus.hpp"

namespace cohdet {

enum class RelKind { Inner, Inter };

std::string_view rel_name(RelKind rel);  // "inner" / "inter"

/// Symmetric 0/1 adjacency with zero diagonal.
using Adjacency = Eigen::MatrixXi;

struct NodeRef {
  int sentence = 0;
  int mention = 0;  // index into Document::entities
  int token_start = 0;
  std::string key;
};

struct Edge {
  int u = 0;  // u < v
  int v = 0;
  RelKind rel = RelKind::Inner;

  bool operator==(const Edge&) const = default;
};

struct GraphLimits {
  std::size_t max_nodes = 90;
  std::size_t max_sentences = 45;

  static GraphLimits uncapped();
};

/// Entity-mention graph of one document. Nodes are ordered by
/// (sentence, token_start); edges by (u, v).
struct CoherenceGraph {
  std::string doc_id;
  std::vector<NodeRef> nodes;
  std::vector<Edge> edges;
  Adjacency inner;
  Adjacency inter;
  std::size_t n_sentences = 0;  // sentences retained under the limits

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  const Adjacency& adjacency(RelKind rel) const { return rel == RelKind::Inner ? inner : inter; }
};

/// Inner edges join every pair of mentions in one sentence; inter edges join
/// every pair of equal-key mentions in different sentences.
CoherenceGraph build_graph(const Document& doc, const GraphLimits& limits = {});

/// Elementwise OR of the per-relation adjacencies.
Adjacency merged_adjacency(const CoherenceGraph& g);

/// D^-1/2 (A + I) D^-1/2 where D holds the row sums of A + I.
template <typename Scalar = double, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normalized_laplacian(
    const Eigen::MatrixBase<Derived>& adjacency) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto n = adjacency.rows();
  eigen_assert(adjacency.cols() == n);
  Mat with_loops = adjacency.template cast<Scalar>() + Mat::Identity(n, n);
  const Vec inv_sqrt_degree = with_loops.rowwise().sum().array().rsqrt().matrix();
  return inv_sqrt_degree.asDiagonal() * with_loops * inv_sqrt_degree.asDiagonal();
}

/// One JSON object: {id, nodes: [{sentence, start, key}], edges: [[u, v, rel]]}.
std::string graph_record(const CoherenceGraph& g);

}  // namespace cohdet
