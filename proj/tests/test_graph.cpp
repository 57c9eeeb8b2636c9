#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gridshed/graph.hpp"
#include "oracles.hpp"

using namespace gridshed;

TEST_CASE("degree centrality on a path and a star") {
  SimpleGraph path{3, {{0, 1}, {1, 2}}};
  auto c = degree_centrality(path);
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c[2] == doctest::Approx(0.5).epsilon(1e-12));

  SimpleGraph star{4, {{0, 1}, {0, 2}, {0, 3}}};
  auto s = degree_centrality(star);
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("edge betweenness on a path: every edge carries 2 of 3 pair paths") {
  SimpleGraph path{3, {{0, 1}, {1, 2}}};
  auto b = edge_betweenness(path);
  CHECK(b[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("edge betweenness on a star: each edge carries 3 of 6 pair paths") {
  SimpleGraph star{4, {{0, 1}, {0, 2}, {0, 3}}};
  for (double v : edge_betweenness(star)) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("edge betweenness handles equal shortest paths on a cycle") {
  // Square: opposite corners have two equally short paths; each edge carries
  // half of each of the two diagonal pairs plus one adjacent pair.
  SimpleGraph square{4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}};
  auto b = edge_betweenness(square);
  for (double v : b) CHECK(v == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("betweenness matches brute-force paths and the tree closed form") {
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(trial % 15);
    SimpleGraph g = testing::random_tree(n, 1000 + trial);
    auto fast = edge_betweenness(g);
    auto brute = testing::brute_tree_edge_betweenness(g);
    auto closed = testing::treeform_edge_betweenness(g);
    REQUIRE(fast.size() == brute.size());
    for (std::size_t e = 0; e < fast.size(); ++e) {
      CHECK(std::abs(fast[e] - brute[e]) < 1e-12);
      CHECK(std::abs(fast[e] - closed[e]) < 1e-12);
    }
  }
}

TEST_CASE("connected components respect node and edge removals") {
  SimpleGraph g = testing::random_tree(12, 7);
  CHECK(connected_components(g).size() == 1);

  // Cutting any tree edge gives exactly two components covering all nodes.
  for (const auto& e : g.edges) {
    auto comps = connected_components(g, {}, {e});
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].size() + comps[1].size() == 12);
    CHECK(comps[0][0] < comps[1][0]);  // ordered by smallest member
  }

  // Removing a node drops it from every component.
  auto comps = connected_components(g, {3}, {});
  std::size_t covered = 0;
  for (const auto& c : comps) {
    covered += c.size();
    for (int v : c) CHECK(v != 3);
  }
  CHECK(covered == 11);
}

TEST_CASE("edge removal matches removal in either orientation") {
  SimpleGraph g{3, {{0, 1}, {1, 2}}};
  auto a = connected_components(g, {}, {{0, 1}});
  auto b = connected_components(g, {}, {{1, 0}});
  CHECK(a == b);
}

TEST_CASE("graph precondition violations throw") {
  CHECK_THROWS_AS(check_graph(SimpleGraph{2, {{0, 0}}}), std::invalid_argument);
  CHECK_THROWS_AS(check_graph(SimpleGraph{2, {{0, 1}, {1, 0}}}), std::invalid_argument);
  CHECK_THROWS_AS(check_graph(SimpleGraph{2, {{0, 5}}}), std::invalid_argument);
  CHECK_THROWS_AS(degree_centrality(SimpleGraph{1, {}}), std::invalid_argument);
  // Disconnected graph has no all-pairs shortest paths to count.
  CHECK_THROWS_AS(edge_betweenness(SimpleGraph{4, {{0, 1}, {2, 3}}}), std::invalid_argument);
}
