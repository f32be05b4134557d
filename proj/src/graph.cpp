#include "gateway/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "gateway/error.hpp"

namespace gateway {

std::string EdgeKey::label() const { return std::to_string(u) + "-" + std::to_string(v); }

NetworkGraph::NetworkGraph(std::vector<NodeId> nodes, const std::vector<SignedEdge>& edges)
    : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
    fail(ErrorKind::Input, "duplicate node label");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);
  adjacency_.resize(nodes_.size());

  for (const auto& e : edges) {
    if (e.u == e.v) fail(ErrorKind::Input, "self-loop at node " + std::to_string(e.u));
    if (!contains(e.u) || !contains(e.v)) {
      fail(ErrorKind::Input, "edge " + std::to_string(e.u) + "-" + std::to_string(e.v) +
                                 " references an undeclared node");
    }
    if (e.sign != 1 && e.sign != -1) fail(ErrorKind::Input, "edge sign must be +1 or -1");
    const auto key = EdgeKey::of(e.u, e.v);
    if (!sign_.emplace(key, e.sign).second) fail(ErrorKind::Input, "duplicate edge " + key.label());
    adjacency_[index_.at(e.u)].push_back(e.v);
    adjacency_[index_.at(e.v)].push_back(e.u);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
  for (const auto& [key, s] : sign_) edges_.push_back(key);
}

std::size_t NetworkGraph::index_of(NodeId n) const {
  auto it = index_.find(n);
  if (it == index_.end()) fail(ErrorKind::Input, "unknown node " + std::to_string(n));
  return it->second;
}

const std::vector<NodeId>& NetworkGraph::neighbors(NodeId n) const { return adjacency_[index_of(n)]; }

int NetworkGraph::sign(NodeId a, NodeId b) const {
  auto it = sign_.find(EdgeKey::of(a, b));
  if (it == sign_.end()) fail(ErrorKind::Input, "no edge " + EdgeKey::of(a, b).label());
  return it->second;
}

std::vector<SignedEdge> NetworkGraph::signed_edges() const {
  std::vector<SignedEdge> out;
  out.reserve(edges_.size());
  for (const auto& [key, s] : sign_) out.push_back({key.u, key.v, s});
  return out;
}

bool NetworkGraph::is_connected() const {
  if (nodes_.empty()) return true;
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<NodeId> queue{nodes_.front()};
  seen[0] = true;
  std::size_t count = 1;
  while (!queue.empty()) {
    const NodeId n = queue.front();
    queue.pop_front();
    for (NodeId m : neighbors(n)) {
      const auto i = index_of(m);
      if (!seen[i]) {
        seen[i] = true;
        ++count;
        queue.push_back(m);
      }
    }
  }
  return count == nodes_.size();
}

NetworkGraph NetworkGraph::with_sign(EdgeKey e, int sign) const {
  auto edges = signed_edges();
  bool found = false;
  for (auto& se : edges) {
    if (EdgeKey::of(se.u, se.v) == e) {
      se.sign = sign;
      found = true;
    }
  }
  if (!found) fail(ErrorKind::Input, "no edge " + e.label());
  return NetworkGraph(nodes_, edges);
}

std::string_view to_string(TopologyClass::Kind kind) {
  switch (kind) {
    case TopologyClass::Kind::Path: return "path";
    case TopologyClass::Kind::Tree: return "tree";
    case TopologyClass::Kind::Unicyclic: return "unicyclic";
    case TopologyClass::Kind::MultiCycle: return "multicycle";
    case TopologyClass::Kind::Disconnected: return "disconnected";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Infection

NodeSet infection_closure(const NetworkGraph& g, const NodeSet& seed) {
  for (NodeId n : seed) {
    if (!g.contains(n)) fail(ErrorKind::Input, "seed node " + std::to_string(n) + " not in graph");
  }
  NodeSet infected = seed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeId n : g.nodes()) {
      if (!infected.contains(n)) continue;
      std::optional<NodeId> healthy;
      int healthy_count = 0;
      for (NodeId m : g.neighbors(n)) {
        if (!infected.contains(m)) {
          healthy = m;
          ++healthy_count;
        }
      }
      if (healthy_count == 1) {
        infected.insert(*healthy);
        changed = true;
      }
    }
  }
  return infected;
}

bool is_infecting(const NetworkGraph& g, const NodeSet& seed) {
  return infection_closure(g, seed).size() == g.size();
}

std::vector<NodeSet> minimum_infecting_sets(const NetworkGraph& g, std::size_t max_nodes) {
  const std::size_t n = g.size();
  if (n > max_nodes) {
    fail(ErrorKind::Capability, "exhaustive infecting-set search limited to " +
                                    std::to_string(max_nodes) + " nodes");
  }
  std::vector<NodeSet> found;
  if (n == 0) return found;
  const auto& nodes = g.nodes();
  for (std::size_t k = 1; k <= n && found.empty(); ++k) {
    // Lexicographic combinations of node indices give canonical order.
    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      NodeSet seed;
      for (auto i : pick) seed.insert(nodes[i]);
      if (is_infecting(g, seed)) found.push_back(std::move(seed));

      std::size_t i = k;
      while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return found;
}

// ---------------------------------------------------------------------------
// Topology

namespace {

// Orders the 2-core of a unicyclic graph into a closed walk starting at its
// smallest label and stepping first to the smaller cycle neighbor.
std::vector<NodeId> order_cycle(const NetworkGraph& g, const NodeSet& core) {
  std::vector<NodeId> cycle;
  const NodeId start = *core.begin();
  NodeId prev = start;
  NodeId cur = start;
  do {
    cycle.push_back(cur);
    NodeId next = cur;
    for (NodeId m : g.neighbors(cur)) {
      if (core.contains(m) && m != prev && !(cycle.size() > 1 && m == cycle[cycle.size() - 2])) {
        next = m;
        break;
      }
    }
    prev = cur;
    cur = next;
  } while (cur != start && cycle.size() <= core.size());
  return cycle;
}

NodeSet two_core(const NetworkGraph& g) {
  std::map<NodeId, std::size_t> degree;
  for (NodeId n : g.nodes()) degree[n] = g.degree(n);
  NodeSet alive(g.nodes().begin(), g.nodes().end());
  std::deque<NodeId> leaves;
  for (auto [n, d] : degree) {
    if (d <= 1) leaves.push_back(n);
  }
  while (!leaves.empty()) {
    const NodeId n = leaves.front();
    leaves.pop_front();
    if (!alive.erase(n)) continue;
    for (NodeId m : g.neighbors(n)) {
      if (alive.contains(m) && --degree[m] == 1) leaves.push_back(m);
    }
  }
  return alive;
}

}  // namespace

TopologyClass classify_topology(const NetworkGraph& g) {
  if (g.size() == 0) fail(ErrorKind::Input, "graph has no nodes");
  TopologyClass out;
  if (!g.is_connected()) {
    out.kind = TopologyClass::Kind::Disconnected;
    return out;
  }
  const auto v = static_cast<int>(g.size());
  const auto e = static_cast<int>(g.edge_count());
  if (e == v - 1) {
    const bool path = std::all_of(g.nodes().begin(), g.nodes().end(),
                                  [&](NodeId n) { return g.degree(n) <= 2; });
    out.kind = path ? TopologyClass::Kind::Path : TopologyClass::Kind::Tree;
  } else if (e == v) {
    out.kind = TopologyClass::Kind::Unicyclic;
    out.cycle = order_cycle(g, two_core(g));
  } else {
    out.kind = TopologyClass::Kind::MultiCycle;
    out.excess = e - v + 1;
  }
  return out;
}

Estimability is_estimable(const NetworkGraph& g) {
  if (g.size() == 0) return {false, "empty graph"};
  if (!g.is_connected()) return {false, "disconnected"};
  if (g.edge_count() > g.size()) return {false, "more edges than sites"};
  return {true, "connected and edges <= sites"};
}

// ---------------------------------------------------------------------------
// Access planning

namespace {

bool is_leaf(const NetworkGraph& g, NodeId n) { return g.degree(n) == 1; }

// Walks from `start` through `first` and onward while the current node has
// degree 2 and is not `stop`-flagged. Returns the visited nodes, the last one
// being the first node of degree != 2 (or a flagged node).
std::vector<NodeId> walk_chain(const NetworkGraph& g, NodeId start, NodeId first,
                               const NodeSet& stop) {
  std::vector<NodeId> path{start};
  NodeId prev = start;
  NodeId cur = first;
  while (true) {
    path.push_back(cur);
    if (g.degree(cur) != 2 || stop.contains(cur)) break;
    const auto& nb = g.neighbors(cur);
    const NodeId next = nb[0] == prev ? nb[1] : nb[0];
    prev = cur;
    cur = next;
    if (cur == start) break;  // pure cycle guard
  }
  return path;
}

std::vector<NodeId> leaves_of(const NetworkGraph& g) {
  std::vector<NodeId> out;
  for (NodeId n : g.nodes()) {
    if (is_leaf(g, n)) out.push_back(n);
  }
  return out;
}

void fill_structure(const NetworkGraph& g, const TopologyClass& topo, AccessPlan& plan) {
  const NodeSet cycle_nodes(topo.cycle.begin(), topo.cycle.end());
  std::set<EdgeKey> covered;
  auto cover = [&](const std::vector<NodeId>& path) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) covered.insert(EdgeKey::of(path[i], path[i + 1]));
  };

  if (g.size() == 1) {
    plan.reference_path = {plan.reference};
    return;
  }

  if (is_leaf(g, plan.reference)) {
    plan.reference_path = walk_chain(g, plan.reference, g.neighbors(plan.reference)[0], cycle_nodes);
  } else {
    plan.reference_path = {plan.reference};
  }
  cover(plan.reference_path);

  if (!topo.cycle.empty()) {
    CyclePlan cp;
    cp.cycle = topo.cycle;
    for (NodeId n : topo.cycle) {
      if (g.degree(n) > 2) {
        cp.attachments.insert(n);
      } else {
        cp.measured.insert(n);
      }
    }
    for (std::size_t i = 0; i < cp.cycle.size(); ++i) {
      covered.insert(EdgeKey::of(cp.cycle[i], cp.cycle[(i + 1) % cp.cycle.size()]));
    }
    plan.cycle_plan = std::move(cp);
  }

  for (NodeId leaf : plan.access_set) {
    if (leaf == plan.reference || !is_leaf(g, leaf)) continue;
    auto walk = walk_chain(g, leaf, g.neighbors(leaf)[0], cycle_nodes);
    cover(walk);
    BranchPath bp;
    bp.leaf = leaf;
    bp.terminal = walk.back();
    walk.pop_back();
    bp.nodes = std::move(walk);
    plan.peel_schedule.push_back(std::move(bp));
  }

  // Whatever is left is a chain hanging between junctions.
  for (NodeId n : g.nodes()) {
    if (g.degree(n) == 2 && !cycle_nodes.contains(n)) continue;
    for (NodeId m : g.neighbors(n)) {
      if (covered.contains(EdgeKey::of(n, m))) continue;
      auto chain = walk_chain(g, n, m, cycle_nodes);
      cover(chain);
      if (chain.back() < chain.front()) std::reverse(chain.begin(), chain.end());
      plan.bridges.push_back(std::move(chain));
    }
  }
  std::sort(plan.bridges.begin(), plan.bridges.end());
}

}  // namespace

AccessPlan compute_access_plan(const NetworkGraph& g, std::optional<NodeId> reference, PlanMode mode) {
  const auto est = is_estimable(g);
  if (!est.estimable) fail(ErrorKind::Capability, "graph not estimable: " + est.reason);
  const auto topo = classify_topology(g);
  const auto leaves = leaves_of(g);

  AccessPlan plan;
  if (reference) {
    if (!g.contains(*reference)) fail(ErrorKind::Input, "reference node not in graph");
    const bool valid = g.size() == 1 || (leaves.empty() ? true : is_leaf(g, *reference));
    if (!valid) {
      fail(ErrorKind::Input, "reference " + std::to_string(*reference) + " is not a leaf");
    }
    plan.reference = *reference;
  } else {
    plan.reference = leaves.empty() ? g.nodes().front() : leaves.front();
  }

  plan.access_set.insert(plan.reference);
  if (topo.kind != TopologyClass::Kind::Path) {
    plan.access_set.insert(leaves.begin(), leaves.end());
    for (NodeId n : topo.cycle) {
      if (g.degree(n) == 2) plan.access_set.insert(n);
    }
  }

  if (mode == PlanMode::Aggressive) {
    plan.experimental = true;
    for (auto it = leaves.rbegin(); it != leaves.rend(); ++it) {
      if (*it == plan.reference || !plan.access_set.contains(*it)) continue;
      NodeSet trial = plan.access_set;
      trial.erase(*it);
      if (signed_propagation_completes(g, trial, plan.reference)) plan.access_set = std::move(trial);
    }
  }

  fill_structure(g, topo, plan);
  return plan;
}

// ---------------------------------------------------------------------------
// Symbolic propagation

namespace {

struct Families {
  std::vector<int> parent;
  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int f) {
    while (parent[f] != f) f = parent[f] = parent[parent[f]];
    return f;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

bool signed_propagation_completes(const NetworkGraph& g, const NodeSet& access, NodeId reference) {
  if (!access.contains(reference)) return false;
  Families fam;
  std::map<NodeId, int> family;  // nodes holding a coefficient vector
  std::set<EdgeKey> known;
  for (NodeId n : access) family[n] = fam.make();

  const auto topo = classify_topology(g);
  const NodeSet cycle_nodes(topo.cycle.begin(), topo.cycle.end());
  bool cycle_done = topo.cycle.empty();

  std::set<std::pair<NodeId, NodeId>> fired;
  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeId n : g.nodes()) {
      if (!family.contains(n)) continue;
      const auto& nb = g.neighbors(n);

      // Second moment pins |c| on the last unknown incident edge.
      std::vector<NodeId> unknown;
      for (NodeId m : nb) {
        if (!known.contains(EdgeKey::of(n, m))) unknown.push_back(m);
      }
      if (unknown.size() == 1) {
        known.insert(EdgeKey::of(n, unknown[0]));
        changed = true;
      }
      if (!unknown.empty() && unknown.size() != 1) continue;

      // With every incident coupling known, the eigen-equation at n yields the
      // one neighbour not yet expressed in n's sign family.
      const int fn = fam.find(family[n]);
      std::vector<NodeId> outside;
      for (NodeId m : nb) {
        if (!family.contains(m) || fam.find(family[m]) != fn) outside.push_back(m);
      }
      if (outside.size() != 1 || fired.contains({n, outside[0]})) continue;
      const NodeId u = outside[0];
      fired.insert({n, u});
      if (family.contains(u)) {
        fam.unite(family[u], fn);
      } else {
        family[u] = fn;
      }
      changed = true;
    }
    if (!cycle_done) {
      bool ready = true;
      for (NodeId n : topo.cycle) {
        if (!family.contains(n)) ready = false;
        for (NodeId m : g.neighbors(n)) {
          if (!cycle_nodes.contains(m) && !known.contains(EdgeKey::of(n, m))) ready = false;
        }
      }
      if (ready) {
        for (std::size_t i = 0; i < topo.cycle.size(); ++i) {
          known.insert(EdgeKey::of(topo.cycle[i], topo.cycle[(i + 1) % topo.cycle.size()]));
        }
        cycle_done = true;
        changed = true;
      }
    }
  }
  return known.size() == g.edge_count() && family.size() == g.size();
}

}  // namespace gateway
