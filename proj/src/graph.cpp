#include "gridshed/graph.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

namespace gridshed {

namespace {

std::pair<int, int> ordered(std::pair<int, int> e) {
  if (e.first > e.second) std::swap(e.first, e.second);
  return e;
}

}  // namespace

void check_graph(const SimpleGraph& g) {
  if (g.n_nodes < 0) throw std::invalid_argument("graph: negative node count");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    if (e.first < 0 || e.first >= g.n_nodes || e.second < 0 || e.second >= g.n_nodes)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (e.first == e.second)
      throw std::invalid_argument("graph: self-loop at node " + std::to_string(e.first));
    if (!seen.insert(ordered(e)).second)
      throw std::invalid_argument("graph: duplicate edge");
  }
}

std::vector<double> degree_centrality(const SimpleGraph& g) {
  check_graph(g);
  if (g.n_nodes < 2) throw std::invalid_argument("degree_centrality: need at least 2 nodes");
  std::vector<double> deg(g.n_nodes, 0.0);
  for (const auto& [u, v] : g.edges) {
    deg[u] += 1.0;
    deg[v] += 1.0;
  }
  for (double& d : deg) d /= static_cast<double>(g.n_nodes - 1);
  return deg;
}

std::vector<double> edge_betweenness(const SimpleGraph& g) {
  check_graph(g);
  const int n = g.n_nodes;
  if (n < 2) throw std::invalid_argument("edge_betweenness: need at least 2 nodes");
  if (connected_components(g).size() != 1)
    throw std::invalid_argument("edge_betweenness: graph must be connected");

  // Map each undirected edge to its index in g.edges.
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, edge index)
  for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
    const auto& [u, v] = g.edges[i];
    adj[u].push_back({v, i});
    adj[v].push_back({u, i});
  }

  std::vector<double> score(g.edges.size(), 0.0);
  std::vector<int> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<int> order;
  order.reserve(n);
  std::vector<std::vector<std::pair<int, int>>> preds(n);  // (pred node, edge index)

  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    order.clear();

    dist[s] = 0;
    sigma[s] = 1.0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      order.push_back(u);
      for (const auto& [w, ei] : adj[u]) {
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[u] + 1) {
          sigma[w] += sigma[u];
          preds[w].push_back({u, ei});
        }
      }
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int w = *it;
      for (const auto& [u, ei] : preds[w]) {
        double c = sigma[u] / sigma[w] * (1.0 + delta[w]);
        score[ei] += c;
        delta[u] += c;
      }
    }
  }

  // Each unordered pair was accumulated from both endpoints.
  const double norm = static_cast<double>(n) * (n - 1) / 2.0;
  for (double& v : score) v = v / 2.0 / norm;
  return score;
}

std::vector<std::vector<int>> connected_components(
    const SimpleGraph& g,
    const std::vector<int>& removed_nodes,
    const std::vector<std::pair<int, int>>& removed_edges) {
  check_graph(g);
  std::vector<char> gone(g.n_nodes, 0);
  for (int v : removed_nodes) {
    if (v < 0 || v >= g.n_nodes) throw std::invalid_argument("connected_components: removed node out of range");
    gone[v] = 1;
  }
  std::set<std::pair<int, int>> cut;
  for (const auto& e : removed_edges) cut.insert(ordered(e));

  std::vector<std::vector<int>> adj(g.n_nodes);
  for (const auto& e : g.edges) {
    if (gone[e.first] || gone[e.second]) continue;
    if (cut.count(ordered(e))) continue;
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }

  std::vector<std::vector<int>> comps;
  std::vector<char> seen(g.n_nodes, 0);
  for (int s = 0; s < g.n_nodes; ++s) {
    if (gone[s] || seen[s]) continue;
    std::vector<int> comp;
    std::deque<int> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      comp.push_back(u);
      for (int w : adj[u]) {
        if (!seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace gridshed
