#include "doctest.h"

#include <cmath>

#include "embedlayout/walks.hpp"

using namespace embedlayout;

namespace {

Graph star(std::size_t leaves) {
  std::vector<Edge> edges;
  for (NodeId leaf = 1; leaf <= leaves; ++leaf) edges.emplace_back(0, leaf);
  return Graph(leaves + 1, edges);
}

}  // namespace

TEST_SUITE("walks") {
  TEST_CASE("single edge walks alternate") {
    const auto corpus = generate_walks(Graph(2, {{0, 1}}), {3, 1}, 5);
    REQUIRE(corpus.walks.size() == 2);
    CHECK(corpus.walks[0] == std::vector<NodeId>{0, 1, 0, 1});
    CHECK(corpus.walks[1] == std::vector<NodeId>{1, 0, 1, 0});
  }

  TEST_CASE("edgeless graph yields single-node walks") {
    const auto corpus = generate_walks(Graph(4, {}), {10, 3}, 1);
    CHECK(corpus.walks.size() == 12);
    for (std::size_t k = 0; k < corpus.walks.size(); ++k) {
      CHECK(corpus.walks[k] == std::vector<NodeId>{k % 4});
    }
    CHECK(corpus.token_count() == 12);
  }

  TEST_CASE("walk order, starts and edge validity") {
    const Graph g = generate_er(15, 0.2, 8);
    const auto corpus = generate_walks(g, {12, 4}, 77);
    REQUIRE(corpus.walks.size() == 60);
    for (std::size_t k = 0; k < corpus.walks.size(); ++k) {
      const auto& walk = corpus.walks[k];
      CHECK(walk.front() == k % 15);
      if (g.degree(walk.front()) == 0) {
        CHECK(walk.size() == 1);
      } else {
        CHECK(walk.size() == 13);
      }
      for (std::size_t s = 1; s < walk.size(); ++s) CHECK(g.has_edge(walk[s - 1], walk[s]));
    }
  }

  TEST_CASE("corpus is a function of the seed") {
    const Graph g = generate_er(20, 0.3, 2);
    const auto a = generate_walks(g, {10, 3}, 99);
    CHECK(a.walks == generate_walks(g, {10, 3}, 99).walks);
    CHECK(a.walks != generate_walks(g, {10, 3}, 100).walks);
  }

  TEST_CASE("extending walks_per_node keeps earlier repeats") {
    // Each walk has its own substream, so adding repeats appends walks
    // without disturbing the existing ones.
    const Graph g = generate_er(12, 0.4, 4);
    const auto small = generate_walks(g, {8, 2}, 5);
    const auto large = generate_walks(g, {8, 5}, 5);
    for (std::size_t k = 0; k < small.walks.size(); ++k) CHECK(small.walks[k] == large.walks[k]);
  }

  TEST_CASE("star leaves are visited uniformly") {
    // Oracle: the first step from the hub is multinomial over 4 leaves.
    const auto corpus = generate_walks(star(4), {2, 10000}, 2024);
    std::vector<double> counts(5, 0.0);
    std::size_t hub_walks = 0;
    for (const auto& walk : corpus.walks) {
      if (walk.front() != 0) continue;
      ++hub_walks;
      REQUIRE(walk.size() == 3);
      CHECK(walk[2] == 0);
      counts[walk[1]] += 1.0;
    }
    REQUIRE(hub_walks == 10000);
    const double expected = 2500.0;
    const double sigma = std::sqrt(10000 * 0.25 * 0.75);
    double chi2 = 0.0;
    for (NodeId leaf = 1; leaf <= 4; ++leaf) {
      CHECK(std::abs(counts[leaf] - expected) < 3 * sigma);
      chi2 += (counts[leaf] - expected) * (counts[leaf] - expected) / expected;
    }
    // 99.9th percentile of chi-square with 3 degrees of freedom
    CHECK(chi2 < 16.27);
  }

  TEST_CASE("corpus dump format") {
    const auto corpus = generate_walks(Graph(2, {{0, 1}}), {2, 1}, 0);
    CHECK(format_corpus(corpus) == "0 1 0\n1 0 1\n");
  }

  TEST_CASE("invalid configuration") {
    CHECK_THROWS_AS(generate_walks(Graph(2, {{0, 1}}), {0, 1}, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_walks(Graph(2, {{0, 1}}), {3, 0}, 0), std::invalid_argument);
  }
}
