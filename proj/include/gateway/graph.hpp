#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gateway {

using NodeId = int;
using NodeSet = std::set<NodeId>;

/// Unordered node pair stored with u < v.
struct EdgeKey {
  NodeId u = 0;
  NodeId v = 0;

  static EdgeKey of(NodeId a, NodeId b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }
  NodeId other(NodeId n) const { return n == u ? v : u; }
  std::string label() const;  // "u-v"

  auto operator<=>(const EdgeKey&) const = default;
};

struct SignedEdge {
  NodeId u = 0;
  NodeId v = 0;
  int sign = 1;
};

/// Simple undirected graph with a known sign for every coupling.
///
/// Node labels are opaque integers kept in ascending order; neighbor lists are
/// sorted too, so every traversal below is deterministic.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(std::vector<NodeId> nodes, const std::vector<SignedEdge>& edges);

  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<EdgeKey>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  bool contains(NodeId n) const { return index_.contains(n); }
  std::size_t index_of(NodeId n) const;
  const std::vector<NodeId>& neighbors(NodeId n) const;
  std::size_t degree(NodeId n) const { return neighbors(n).size(); }
  bool has_edge(NodeId a, NodeId b) const { return sign_.contains(EdgeKey::of(a, b)); }
  int sign(NodeId a, NodeId b) const;
  int sign(EdgeKey e) const { return sign(e.u, e.v); }

  std::vector<SignedEdge> signed_edges() const;
  bool is_connected() const;

  /// Copy of this graph with one declared coupling sign replaced.
  NetworkGraph with_sign(EdgeKey e, int sign) const;

 private:
  std::vector<NodeId> nodes_;
  std::vector<EdgeKey> edges_;
  std::map<EdgeKey, int> sign_;
  std::map<NodeId, std::size_t> index_;
  std::vector<std::vector<NodeId>> adjacency_;
};

struct TopologyClass {
  enum class Kind { Path, Tree, Unicyclic, MultiCycle, Disconnected };

  Kind kind = Kind::Disconnected;
  std::vector<NodeId> cycle;  // Unicyclic only; starts at the smallest label
  int excess = 0;             // MultiCycle only; independent cycle count |E|-|V|+1
};

std::string_view to_string(TopologyClass::Kind kind);

struct Estimability {
  bool estimable = false;
  std::string reason;
};

/// A branch peeled from an accessed leaf. `nodes` runs from the leaf up to
/// the node just before `terminal` (the junction or cycle attachment).
struct BranchPath {
  NodeId leaf = 0;
  std::vector<NodeId> nodes;
  NodeId terminal = 0;
};

struct CyclePlan {
  std::vector<NodeId> cycle;
  NodeSet attachments;
  NodeSet measured;
};

struct AccessPlan {
  NodeId reference = 0;
  NodeSet access_set;
  std::vector<NodeId> reference_path;
  std::vector<BranchPath> peel_schedule;
  /// Chains of degree-2 nodes between two junctions (or between a junction
  /// and an unaccessed leaf). Endpoints included. Empty for single-junction
  /// trees and for the FMO-type layouts.
  std::vector<std::vector<NodeId>> bridges;
  std::optional<CyclePlan> cycle_plan;
  bool experimental = false;
};

enum class PlanMode {
  Conservative,  // every branch end is accessed
  Aggressive,    // experimental: drops leaves recoverable through junction sign chaining
};

NodeSet infection_closure(const NetworkGraph& g, const NodeSet& seed);
bool is_infecting(const NetworkGraph& g, const NodeSet& seed);

/// Exhaustive search; only meant as a test oracle.
std::vector<NodeSet> minimum_infecting_sets(const NetworkGraph& g, std::size_t max_nodes = 16);

TopologyClass classify_topology(const NetworkGraph& g);
Estimability is_estimable(const NetworkGraph& g);

AccessPlan compute_access_plan(const NetworkGraph& g, std::optional<NodeId> reference = std::nullopt,
                               PlanMode mode = PlanMode::Conservative);

/// Whether the reconstruction engine can resolve every coupling and field of
/// `g` from moduli at `access` with `reference` as gauge site. Mirrors the
/// propagation rules used in reconstruction, without any numbers.
bool signed_propagation_completes(const NetworkGraph& g, const NodeSet& access, NodeId reference);

}  // namespace gateway
