#pragma once

#include <utility>
#include <vector>

namespace gridshed {

// Undirected simple graph. Nodes are 0..n_nodes-1; edges must not repeat
// (in either orientation) and must not be self-loops.
struct SimpleGraph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;
};

// Throws std::invalid_argument on self-loops, duplicate edges, or endpoints
// outside [0, n_nodes).
void check_graph(const SimpleGraph& g);

// deg(i) / (n - 1). Requires n >= 2.
std::vector<double> degree_centrality(const SimpleGraph& g);

// Shortest-path edge betweenness (Brandes accumulation), normalized by the
// number of unordered node pairs n(n-1)/2. Output is aligned with g.edges.
// Requires a connected graph.
std::vector<double> edge_betweenness(const SimpleGraph& g);

// Connected components after deleting `removed_nodes` and `removed_edges`
// (edges match in either orientation). Components are ordered by their
// smallest node id; node ids within a component are ascending.
std::vector<std::vector<int>> connected_components(
    const SimpleGraph& g,
    const std::vector<int>& removed_nodes = {},
    const std::vector<std::pair<int, int>>& removed_edges = {});

}  // namespace gridshed
