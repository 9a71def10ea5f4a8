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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cohdet/graph_stats.hpp"
#include "cohdet/random.hpp"
#include "oracles.hpp"

using namespace cohdet;

namespace {

Adjacency from_edges(int n, std::initializer_list<std::pair<int, int>> edges) {
  Adjacency a = Adjacency::Zero(n, n);
  for (auto [u, v] : edges) a(u, v) = a(v, u) = 1;
  return a;
}

const Adjacency triangle = from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
const Adjacency path3 = from_edges(3, {{0, 1}, {1, 2}});

}  // namespace

TEST_CASE("avg_degree") {
  CHECK(avg_degree(triangle) == 2.0);
  CHECK(avg_degree(path3) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(edge_count(triangle) == 3);
  CHECK(avg_degree(from_edges(2, {})) == 0.0);
}

TEST_CASE("lcc_portion") {
  CHECK(lcc_portion(triangle) == 1.0);
  CHECK(lcc_portion(from_edges(4, {{0, 1}, {1, 2}, {0, 2}})) == 0.75);
  CHECK(lcc_portion(from_edges(4, {})) == 0.25);
}

TEST_CASE("avg_clustering") {
  CHECK(avg_clustering(triangle) == 1.0);
  CHECK(avg_clustering(path3) == 0.0);
  // Triangle plus a pendant on node 0: c = (1/3, 1, 1, 0) / 4.
  CHECK(avg_clustering(from_edges(4, {{0, 1}, {1, 2}, {0, 2}, {0, 3}})) ==
        doctest::Approx((1.0 / 3.0 + 2.0) / 4.0).epsilon(1e-15));
}

TEST_CASE("core_decomposition") {
  auto t = core_decomposition(triangle);
  CHECK(t.core_numbers == std::vector<int>{2, 2, 2});
  CHECK(t.degeneracy == 2);
  auto p = core_decomposition(path3);
  CHECK(p.core_numbers == std::vector<int>{1, 1, 1});
  CHECK(p.degeneracy == 1);
  auto k4_tail = core_decomposition(from_edges(
      6, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {3, 4}}));
  CHECK(k4_tail.core_numbers == std::vector<int>{3, 3, 3, 3, 1, 0});
  CHECK(k4_tail.degeneracy == 3);
  CHECK(core_decomposition(Adjacency(0, 0)).degeneracy == 0);
}

TEST_CASE("structure_entropy") {
  CHECK(structure_entropy(triangle) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  const Adjacency star = from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK(structure_entropy(star) == doctest::Approx(1.24245).epsilon(1e-5));
  // Zero-degree nodes carry no mass.
  CHECK(structure_entropy(from_edges(5, {{0, 1}, {1, 2}, {0, 2}})) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(structure_entropy(from_edges(3, {})) == 0.0);
}

TEST_CASE("empty graphs") {
  const Adjacency empty(0, 0);
  CHECK_THROWS_AS(avg_degree(empty), StatsError);
  CHECK_THROWS_AS(lcc_portion(empty), StatsError);
  const auto r = graph_stats(empty);
  CHECK(r.n_nodes == 0);
  CHECK(r.avg_degree == 0.0);
  CHECK(r.structure_entropy == 0.0);
}

TEST_CASE("degree_histogram pools nodes") {
  const Adjacency one[] = {triangle};
  auto h = degree_histogram(one);
  CHECK(h.bins == std::map<int, double>{{2, 1.0}});
  const Adjacency two[] = {triangle, path3, Adjacency(0, 0)};
  h = degree_histogram(two);
  CHECK(h.n_nodes == 6);
  CHECK(h.bins.at(2) == doctest::Approx(4.0 / 6.0));
  CHECK(h.bins.at(1) == doctest::Approx(2.0 / 6.0));
  const Adjacency none[] = {Adjacency(0, 0)};
  CHECK_THROWS_AS(degree_histogram(none), StatsError);
}

TEST_CASE("js_divergence") {
  DegreeHistogram p, q;
  p.bins = {{1, 0.5}, {2, 0.5}};
  q.bins = {{2, 0.5}, {3, 0.5}};
  // M = (1/4, 1/2, 1/4): each side contributes 1/2 ln 2.
  CHECK(js_divergence(p, q) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(js_divergence(p, p) == 0.0);
}

TEST_CASE("brute-force agreement on random graphs") {
  Rng rng = make_rng(17);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 20));
    const double p = uniform01(rng);
    Adjacency a = Adjacency::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (uniform01(rng) < p) a(i, j) = a(j, i) = 1;
      }
    }
    const auto m = oracle::to_matrix(a);
    const auto r = graph_stats(a);
    CHECK(r.avg_degree == doctest::Approx(oracle::avg_degree(m)).epsilon(1e-12));
    CHECK(r.avg_clustering == doctest::Approx(oracle::avg_clustering(m)).epsilon(1e-12));
    CHECK(r.lcc_portion == doctest::Approx(oracle::lcc_portion(m)).epsilon(1e-12));
    CHECK(r.core_numbers == oracle::core_numbers(m));
    CHECK(r.structure_entropy == doctest::Approx(oracle::structure_entropy(m)).epsilon(1e-12));
    CHECK(r.node_degrees == oracle::degrees(m));
  }
}

TEST_CASE("corpus_report") {
  SUBCASE("identical classes") {
    const Adjacency g[] = {triangle};
    const auto r = corpus_report(g, g);
    CHECK(r.hwt.avg_degree == r.mgt.avg_degree);
    CHECK(r.hwt.structure_entropy == r.mgt.structure_entropy);
    CHECK(r.hwt.degeneracy == r.mgt.degeneracy);
    CHECK(r.jsd_degree == 0.0);
  }
  SUBCASE("empty graphs count toward size means only") {
    const Adjacency h[] = {triangle, Adjacency(0, 0)};
    const Adjacency m[] = {path3};
    const auto r = corpus_report(h, m);
    CHECK(r.hwt.n_graphs == 2);
    CHECK(r.hwt.n_nonempty == 1);
    CHECK(r.hwt.vertices == 1.5);
    CHECK(r.hwt.avg_degree == 2.0);
    CHECK(r.hwt.degeneracy == 1.0);
  }
  SUBCASE("no graphs") {
    const Adjacency g[] = {triangle};
    CHECK_THROWS_AS(corpus_report(g, {}), StatsError);
  }
  SUBCASE("thread count does not change the report") {
    Rng rng = make_rng(3);
    std::vector<Adjacency> h, m;
    for (int i = 0; i < 40; ++i) {
      const int n = 1 + static_cast<int>(uniform_index(rng, 12));
      Adjacency a = Adjacency::Zero(n, n);
      for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
          if (uniform01(rng) < 0.3) a(x, y) = a(y, x) = 1;
        }
      }
      (i % 2 ? h : m).push_back(a);
    }
    CHECK(report_json(corpus_report(h, m, 1)) == report_json(corpus_report(h, m, 4)));
  }
}

TEST_CASE("report_json and distribution dump") {
  const Adjacency h[] = {triangle};
  const Adjacency m[] = {path3};
  const auto r = corpus_report(h, m);
  const auto j = report_json(r);
  REQUIRE(j["classes"].size() == 2);
  CHECK(j["classes"][0]["class"] == "human");
  CHECK(j["classes"][1]["class"] == "machine");
  CHECK(j.contains("jsd_degree"));
  CHECK(j["degree_histogram"]["machine"]["1"].get<double>() == doctest::Approx(2.0 / 3.0));

  std::ostringstream dump;
  write_distribution_dump(dump, r);
  std::istringstream lines(dump.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "class\tmetric\tscope\tvalue");
  int rows = 0, node_degree_rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    if (line.find("\tdegree\tnode\t") != std::string::npos) ++node_degree_rows;
  }
  // Per class: 1 graph degree, 3 node degrees, 3 node cores, 1 degeneracy, 1 entropy.
  CHECK(rows == 18);
  CHECK(node_degree_rows == 6);
}
