#include <doctest.h>

#include <algorithm>
#include <random>

#include "gateway/error.hpp"
#include "gateway/graph.hpp"
#include "support.hpp"

using namespace gateway;
using namespace gateway::testing;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Input;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("construction rejects malformed input") {
    CHECK(kind_of([] { make_graph({1, 2}, {{1, 1}}); }) == ErrorKind::Input);
    CHECK(kind_of([] { make_graph({1, 2}, {{1, 2}, {2, 1}}); }) == ErrorKind::Input);
    CHECK(kind_of([] { make_graph({1, 2}, {{1, 3}}); }) == ErrorKind::Input);
    CHECK(kind_of([] { make_graph({1, 1}, {}); }) == ErrorKind::Input);
    CHECK(kind_of([] { make_graph({1, 2}, {{1, 2}}, {0}); }) == ErrorKind::Input);
  }

  TEST_CASE("neighbors are sorted and signs are symmetric") {
    const auto g = make_graph(labels(4), {{3, 1}, {1, 2}, {1, 4}}, {1, -1, 1});
    CHECK(g.neighbors(1) == std::vector<NodeId>{2, 3, 4});
    CHECK(g.sign(1, 2) == -1);
    CHECK(g.sign(2, 1) == -1);
    CHECK(g.with_sign(EdgeKey::of(1, 2), 1).sign(1, 2) == 1);
    CHECK(EdgeKey::of(5, 2).label() == "2-5");
  }

  TEST_CASE("infection closure") {
    CHECK(infection_closure(path_graph(5), {1}) == NodeSet{1, 2, 3, 4, 5});
    CHECK(infection_closure(fmo_graph(), {1}) == NodeSet{1, 2, 3, 4});
    CHECK(infection_closure(fmo_graph(), {1, 5}) == NodeSet{1, 2, 3, 4, 5, 6, 7});
    CHECK(infection_closure(path_graph(5), {}) == NodeSet{});
    CHECK(kind_of([] { infection_closure(path_graph(3), {9}); }) == ErrorKind::Input);
  }

  TEST_CASE("is_infecting") {
    CHECK(is_infecting(fig2a_tree(), {1, 5}));
    CHECK_FALSE(is_infecting(fmo_graph(), {1}));
    for (const auto& g : {fmo_graph(), bowtie(), complete4(), fig2a_tree()}) {
      const NodeSet all(g.nodes().begin(), g.nodes().end());
      CHECK(is_infecting(g, all));
    }
    // A single node with no edges is infected by itself.
    CHECK(is_infecting(make_graph({7}, {}), {7}));
  }

  TEST_CASE("minimum infecting sets") {
    CHECK(minimum_infecting_sets(path_graph(3)) == std::vector<NodeSet>{{1}, {3}});

    const auto tree = minimum_infecting_sets(fig2a_tree());
    REQUIRE_FALSE(tree.empty());
    CHECK(tree.front().size() == 2);
    CHECK(std::find(tree.begin(), tree.end(), NodeSet{1, 5}) != tree.end());

    const auto loop = minimum_infecting_sets(loop_with_branches());
    REQUIRE_FALSE(loop.empty());
    CHECK(loop.front().size() == 3);
    CHECK(std::find(loop.begin(), loop.end(), NodeSet{1, 3, 6}) != loop.end());

    const auto fmo = minimum_infecting_sets(fmo_graph());
    CHECK(fmo.front().size() == 2);
    CHECK(std::find(fmo.begin(), fmo.end(), NodeSet{1, 5}) != fmo.end());

    for (const auto& set : loop) CHECK(is_infecting(loop_with_branches(), set));
    CHECK(kind_of([] { minimum_infecting_sets(path_graph(17)); }) == ErrorKind::Capability);
    CHECK(minimum_infecting_sets(path_graph(17), 17).size() == 2);
  }

  TEST_CASE("topology classes") {
    const auto fmo = classify_topology(fmo_graph());
    CHECK(fmo.kind == TopologyClass::Kind::Unicyclic);
    CHECK(fmo.cycle == std::vector<NodeId>{4, 5, 6, 7});
    CHECK(classify_topology(path_graph(3)).kind == TopologyClass::Kind::Path);
    CHECK(classify_topology(make_graph({4}, {})).kind == TopologyClass::Kind::Path);
    CHECK(classify_topology(fig2a_tree()).kind == TopologyClass::Kind::Tree);
    const auto k4 = classify_topology(complete4());
    CHECK(k4.kind == TopologyClass::Kind::MultiCycle);
    CHECK(k4.excess == 3);
    CHECK(classify_topology(bowtie()).excess == 2);
    CHECK(classify_topology(make_graph(labels(4), {{1, 2}, {3, 4}})).kind == TopologyClass::Kind::Disconnected);
    CHECK(classify_topology(loop_with_branches()).cycle == std::vector<NodeId>{2, 3, 4, 5});
    CHECK(classify_topology(cycle_graph(5)).cycle == std::vector<NodeId>{1, 2, 3, 4, 5});
  }

  TEST_CASE("estimability") {
    CHECK(is_estimable(fmo_graph()).estimable);
    for (const auto& g : {bowtie(), complete4()}) {
      const auto e = is_estimable(g);
      CHECK_FALSE(e.estimable);
      CHECK(e.reason == "more edges than sites");
    }
    const auto dimers = is_estimable(make_graph(labels(4), {{1, 2}, {3, 4}}));
    CHECK_FALSE(dimers.estimable);
    CHECK(dimers.reason == "disconnected");
  }

  TEST_CASE("access plan for the pigment topology") {
    const auto plan = compute_access_plan(fmo_graph(), 1);
    CHECK(plan.reference == 1);
    CHECK(plan.access_set == NodeSet{1, 5, 6, 7});
    CHECK(plan.reference_path == std::vector<NodeId>{1, 2, 3, 4});
    REQUIRE(plan.cycle_plan);
    CHECK(plan.cycle_plan->attachments == NodeSet{4});
    CHECK(plan.cycle_plan->measured == NodeSet{5, 6, 7});
    CHECK(plan.peel_schedule.empty());
    CHECK_FALSE(plan.experimental);
  }

  TEST_CASE("access plan for the branched tree") {
    const auto plan = compute_access_plan(fig2a_tree(), 1);
    CHECK(plan.access_set == NodeSet{1, 5, 8});
    CHECK(plan.reference_path == std::vector<NodeId>{1, 2, 3});
    REQUIRE(plan.peel_schedule.size() == 2);
    CHECK(plan.peel_schedule[0].leaf == 5);
    CHECK(plan.peel_schedule[0].nodes == std::vector<NodeId>{5, 4});
    CHECK(plan.peel_schedule[0].terminal == 3);
    CHECK(plan.peel_schedule[1].leaf == 8);
    CHECK(plan.peel_schedule[1].nodes == std::vector<NodeId>{8, 7, 6});
    CHECK(plan.peel_schedule[1].terminal == 3);
    CHECK_FALSE(plan.cycle_plan);
  }

  TEST_CASE("access plan for chains and cycles") {
    const auto plan = compute_access_plan(path_graph(4), 1);
    CHECK(plan.access_set == NodeSet{1});
    CHECK(plan.reference_path == std::vector<NodeId>{1, 2, 3, 4});
    CHECK(compute_access_plan(path_graph(4), 4).reference_path == std::vector<NodeId>{4, 3, 2, 1});
    CHECK(compute_access_plan(path_graph(4)).reference == 1);

    const auto ring = compute_access_plan(cycle_graph(4));
    CHECK(ring.reference == 1);
    CHECK(ring.access_set.contains(1));
    CHECK(is_infecting(cycle_graph(4), ring.access_set));

    const auto loop = compute_access_plan(loop_with_branches());
    CHECK(loop.reference == 1);
    CHECK(loop.access_set == NodeSet{1, 3, 5, 6, 7});
  }

  TEST_CASE("access plan errors") {
    CHECK(kind_of([] { compute_access_plan(fig2a_tree(), 3); }) == ErrorKind::Input);
    CHECK(kind_of([] { compute_access_plan(fig2a_tree(), 42); }) == ErrorKind::Input);
    CHECK(kind_of([] { compute_access_plan(bowtie()); }) == ErrorKind::Capability);
    CHECK(kind_of([] { compute_access_plan(make_graph(labels(4), {{1, 2}, {3, 4}})); }) == ErrorKind::Capability);
  }

  TEST_CASE("aggressive plans are flagged and still propagate") {
    const auto g = fig2a_tree();
    const auto conservative = compute_access_plan(g);
    const auto aggressive = compute_access_plan(g, std::nullopt, PlanMode::Aggressive);
    CHECK(aggressive.experimental);
    CHECK(aggressive.access_set.size() < conservative.access_set.size());
    CHECK(std::includes(conservative.access_set.begin(), conservative.access_set.end(),
                        aggressive.access_set.begin(), aggressive.access_set.end()));
    CHECK(signed_propagation_completes(g, aggressive.access_set, aggressive.reference));
    CHECK(signed_propagation_completes(g, conservative.access_set, conservative.reference));
    CHECK_FALSE(signed_propagation_completes(g, {1}, 1));
  }
}

TEST_SUITE("graph properties") {
  TEST_CASE("closure is monotone and idempotent") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const auto g = trial % 2 ? random_tree(2 + trial % 10, rng) : random_unicyclic(4 + trial % 8, rng);
      NodeSet small;
      NodeSet large;
      for (NodeId n : g.nodes()) {
        const int r = std::uniform_int_distribution<int>(0, 3)(rng);
        if (r == 0) small.insert(n);
        if (r <= 1) large.insert(n);
      }
      const auto cs = infection_closure(g, small);
      const auto cl = infection_closure(g, large);
      CHECK(std::includes(cl.begin(), cl.end(), cs.begin(), cs.end()));
      CHECK(infection_closure(g, cs) == cs);
    }
  }

  TEST_CASE("closure matches the randomized-order oracle") {
    std::mt19937_64 rng(12);
    for (int n = 1; n <= 5; ++n) {
      for (const auto& g : all_connected_graphs(n)) {
        std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
        for (const auto& e : g.edges()) {
          adj[static_cast<std::size_t>(e.u - 1)][static_cast<std::size_t>(e.v - 1)] = true;
          adj[static_cast<std::size_t>(e.v - 1)][static_cast<std::size_t>(e.u - 1)] = true;
        }
        for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
          NodeSet seed;
          std::vector<bool> start(static_cast<std::size_t>(n));
          for (int i = 0; i < n; ++i) {
            if (mask >> i & 1ULL) {
              seed.insert(i + 1);
              start[static_cast<std::size_t>(i)] = true;
            }
          }
          const auto oracle = naive_closure(adj, start, rng);
          NodeSet expect;
          for (int i = 0; i < n; ++i) {
            if (oracle[static_cast<std::size_t>(i)]) expect.insert(i + 1);
          }
          REQUIRE(infection_closure(g, seed) == expect);
        }
      }
    }
  }

  TEST_CASE("every conservative plan is infecting and signed-complete") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 3 + trial % 10;
      const auto g = trial % 3 == 0 ? random_unicyclic(std::max(n, 3), rng) : random_tree(n, rng);
      const auto plan = compute_access_plan(g);
      CHECK(is_infecting(g, plan.access_set));
      CHECK(signed_propagation_completes(g, plan.access_set, plan.reference));
      // Every node appears in the reference path, a peel path, a bridge or the cycle.
      NodeSet covered(plan.reference_path.begin(), plan.reference_path.end());
      for (const auto& b : plan.peel_schedule) covered.insert(b.nodes.begin(), b.nodes.end());
      for (const auto& b : plan.bridges) covered.insert(b.begin(), b.end());
      if (plan.cycle_plan) covered.insert(plan.cycle_plan->cycle.begin(), plan.cycle_plan->cycle.end());
      CHECK(covered.size() == g.size());
    }
  }

  TEST_CASE("aggressive plans never exceed conservative ones") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 200; ++trial) {
      const auto g = random_tree(3 + trial % 10, rng);
      const auto c = compute_access_plan(g);
      const auto a = compute_access_plan(g, std::nullopt, PlanMode::Aggressive);
      CHECK(std::includes(c.access_set.begin(), c.access_set.end(), a.access_set.begin(), a.access_set.end()));
      CHECK(signed_propagation_completes(g, a.access_set, a.reference));
    }
  }
}
