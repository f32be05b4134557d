// Test-only fixtures and oracles. Nothing here calls into the code paths it
// is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "gateway/graph.hpp"
#include "gateway/spectral.hpp"

namespace gateway::testing {

inline NetworkGraph make_graph(const std::vector<NodeId>& nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                               const std::vector<int>& signs = {}) {
  std::vector<SignedEdge> se;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    se.push_back({edges[i].first, edges[i].second, signs.empty() ? 1 : signs[i]});
  }
  return NetworkGraph(nodes, se);
}

inline std::vector<NodeId> labels(int n) {
  std::vector<NodeId> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  return v;
}

inline NetworkGraph path_graph(int n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(i, i + 1);
  return make_graph(labels(n), e);
}

inline NetworkGraph cycle_graph(int n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(i, i + 1);
  e.emplace_back(1, n);
  return make_graph(labels(n), e);
}

/// Seven-site pigment topology: chain 1-2-3-4 and the loop 4-5-6-7.
inline NetworkGraph fmo_graph(const std::vector<int>& signs = {}) {
  return make_graph(labels(7), {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {4, 7}}, signs);
}

/// Branched tree with leaves 1, 5, 8 meeting at site 3.
inline NetworkGraph fig2a_tree() {
  return make_graph(labels(8), {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {3, 6}, {6, 7}, {7, 8}});
}

/// Loop 2-3-4-5 with leaf 1 on site 2 and leaves 6, 7 on site 4. Needs three
/// seeds, e.g. {1, 3, 6}.
inline NetworkGraph loop_with_branches() {
  return make_graph(labels(7), {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {2, 5}, {4, 6}, {4, 7}});
}

/// Two triangles sharing site 3: 5 sites, 6 edges.
inline NetworkGraph bowtie() {
  return make_graph(labels(5), {{1, 2}, {2, 3}, {1, 3}, {3, 4}, {4, 5}, {3, 5}});
}

inline NetworkGraph complete4() {
  return make_graph(labels(4), {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});
}

/// Triangle 1-2-3 with a branch 3-4-5.
inline NetworkGraph triangle_plus_branch() {
  return make_graph(labels(5), {{1, 2}, {2, 3}, {1, 3}, {3, 4}, {4, 5}});
}

// ---------------------------------------------------------------------------
// Random instances

inline std::vector<int> random_signs(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> s(n);
  for (auto& v : s) v = coin(rng) ? 1 : -1;
  return s;
}

inline NetworkGraph random_path(int n, std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(i, i + 1);
  return make_graph(labels(n), e, random_signs(e.size(), rng));
}

/// Uniform labelled tree via a Pruefer sequence.
inline NetworkGraph random_tree(int n, std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> e;
  if (n == 2) e.emplace_back(1, 2);
  if (n > 2) {
    std::uniform_int_distribution<int> pick(1, n);
    std::vector<int> seq(static_cast<std::size_t>(n - 2));
    for (auto& s : seq) s = pick(rng);
    std::vector<int> degree(static_cast<std::size_t>(n + 1), 1);
    for (int s : seq) ++degree[static_cast<std::size_t>(s)];
    for (int s : seq) {
      for (int leaf = 1; leaf <= n; ++leaf) {
        if (degree[static_cast<std::size_t>(leaf)] == 1) {
          e.emplace_back(std::min(leaf, s), std::max(leaf, s));
          --degree[static_cast<std::size_t>(leaf)];
          --degree[static_cast<std::size_t>(s)];
          break;
        }
      }
    }
    std::vector<int> last;
    for (int v = 1; v <= n; ++v) {
      if (degree[static_cast<std::size_t>(v)] == 1) last.push_back(v);
    }
    e.emplace_back(last[0], last[1]);
  }
  return make_graph(labels(n), e, random_signs(e.size(), rng));
}

/// Random tree plus one extra edge closing a cycle of length >= min_cycle.
inline NetworkGraph random_unicyclic(int n, std::mt19937_64& rng, int min_cycle = 3) {
  while (true) {
    const auto tree = random_tree(n, rng);
    std::uniform_int_distribution<int> pick(1, n);
    const int a = pick(rng);
    const int b = pick(rng);
    if (a == b || tree.has_edge(a, b)) continue;
    // Tree distance a..b + 1 is the cycle length.
    std::vector<int> dist(static_cast<std::size_t>(n + 1), -1);
    std::vector<int> queue{a};
    dist[static_cast<std::size_t>(a)] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      for (NodeId m : tree.neighbors(queue[i])) {
        if (dist[static_cast<std::size_t>(m)] < 0) {
          dist[static_cast<std::size_t>(m)] = dist[static_cast<std::size_t>(queue[i])] + 1;
          queue.push_back(m);
        }
      }
    }
    if (dist[static_cast<std::size_t>(b)] + 1 < min_cycle) continue;
    auto edges = tree.signed_edges();
    edges.push_back({std::min(a, b), std::max(a, b), std::bernoulli_distribution(0.5)(rng) ? 1 : -1});
    return NetworkGraph(tree.nodes(), edges);
  }
}

/// Fields in [-1, 1] with a minimum pairwise separation, |c| in [0.2, 1.5]
/// with the graph's declared signs.
inline HamiltonianParams random_params(const NetworkGraph& g, std::mt19937_64& rng, double min_sep = 0.0) {
  std::uniform_real_distribution<double> field(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.2, 1.5);
  HamiltonianParams p;
  for (NodeId n : g.nodes()) {
    double b = field(rng);
    for (int tries = 0; tries < 1000; ++tries) {
      const bool clear = std::all_of(p.b.begin(), p.b.end(), [&](const auto& kv) {
        return std::abs(kv.second - b) >= min_sep;
      });
      if (clear) break;
      b = field(rng);
    }
    p.b[n] = b;
  }
  for (const auto& e : g.edges()) p.c[e] = g.sign(e) * mag(rng);
  return p;
}

// ---------------------------------------------------------------------------
// Infection oracle: adjacency matrix, rule applied to one random infected
// node at a time until nothing changes.

inline std::vector<bool> naive_closure(const std::vector<std::vector<bool>>& adj, std::vector<bool> infected,
                                       std::mt19937_64& rng) {
  const std::size_t n = adj.size();
  while (true) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    bool changed = false;
    for (std::size_t v : order) {
      if (!infected[v]) continue;
      std::size_t healthy = n;
      int count = 0;
      for (std::size_t u = 0; u < n; ++u) {
        if (adj[v][u] && !infected[u]) {
          healthy = u;
          ++count;
        }
      }
      if (count == 1) {
        infected[healthy] = true;
        changed = true;
        break;  // restart with a fresh random order
      }
    }
    if (!changed) return infected;
  }
}

/// Every connected labelled simple graph on n nodes (labels 1..n).
inline std::vector<NetworkGraph> all_connected_graphs(int n) {
  std::vector<std::pair<NodeId, NodeId>> slots;
  for (int a = 1; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) slots.emplace_back(a, b);
  }
  std::vector<NetworkGraph> out;
  const std::uint64_t total = 1ULL << slots.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    std::vector<std::pair<NodeId, NodeId>> e;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (mask >> i & 1ULL) e.push_back(slots[i]);
    }
    if (static_cast<int>(e.size()) < n - 1) continue;
    auto g = make_graph(labels(n), e);
    if (g.is_connected()) out.push_back(std::move(g));
  }
  return out;
}

}  // namespace gateway::testing
