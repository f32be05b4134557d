#include <doctest.h>

#include <cmath>
#include <random>

#include "gateway/error.hpp"
#include "gateway/spectral.hpp"
#include "support.hpp"

using namespace gateway;
using namespace gateway::testing;
using doctest::Approx;

namespace {

HamiltonianParams uniform_params(const NetworkGraph& g, double b, double c) {
  HamiltonianParams p;
  for (NodeId n : g.nodes()) p.b[n] = b;
  for (const auto& e : g.edges()) p.c[e] = g.sign(e) * c;
  return p;
}

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

TEST_SUITE("spectral") {
  TEST_CASE("two-site matrix") {
    const auto m = assemble_single_excitation(path_graph(2), uniform_params(path_graph(2), 0.0, 1.0));
    CHECK(m.entries(0, 0) == 0.0);
    CHECK(m.entries(0, 1) == 1.0);
    CHECK(m.entries(1, 0) == 1.0);
    CHECK(m.entries(1, 1) == 0.0);
  }

  TEST_CASE("sparsity follows the edge list") {
    std::mt19937_64 rng(21);
    const auto g = fmo_graph(random_signs(7, rng));
    const auto p = random_params(g, rng);
    const auto m = assemble_single_excitation(g, p);
    for (NodeId a : g.nodes()) {
      for (NodeId b : g.nodes()) {
        const double v = m.entries(static_cast<Eigen::Index>(g.index_of(a)), static_cast<Eigen::Index>(g.index_of(b)));
        if (a == b) {
          CHECK(v == p.b.at(a));
        } else if (g.has_edge(a, b)) {
          CHECK(v == p.c.at(EdgeKey::of(a, b)));
        } else {
          CHECK(v == 0.0);
        }
      }
    }
  }

  TEST_CASE("parameter validation") {
    const auto g = path_graph(3);
    auto p = uniform_params(g, 0.0, 1.0);
    auto wrong_sign = p;
    wrong_sign.c[EdgeKey::of(1, 2)] = -1.0;
    CHECK(kind_of([&] { assemble_single_excitation(g, wrong_sign); }) == ErrorKind::Input);
    auto missing = p;
    missing.b.erase(2);
    CHECK(kind_of([&] { assemble_single_excitation(g, missing); }) == ErrorKind::Input);
    auto zero = p;
    zero.c[EdgeKey::of(2, 3)] = 0.0;
    CHECK(kind_of([&] { assemble_single_excitation(g, zero); }) == ErrorKind::Input);
    auto extra = p;
    extra.c[EdgeKey::of(1, 3)] = 1.0;
    CHECK(kind_of([&] { assemble_single_excitation(g, extra); }) == ErrorKind::Input);
    auto nan = p;
    nan.b[1] = std::nan("");
    CHECK(kind_of([&] { assemble_single_excitation(g, nan); }) == ErrorKind::Input);
  }

  TEST_CASE("known spectra") {
    const auto two = eigendecompose(assemble_single_excitation(path_graph(2), uniform_params(path_graph(2), 0, 1)));
    CHECK(two.values(0) == Approx(-1.0));
    CHECK(two.values(1) == Approx(1.0));
    CHECK(two.coefficients(1).cwiseAbs2()(0) == Approx(0.5));

    const auto three = eigendecompose(assemble_single_excitation(path_graph(3), uniform_params(path_graph(3), 0, 1)));
    CHECK(three.values(0) == Approx(-std::sqrt(2.0)));
    CHECK(three.values(1) == Approx(0.0));
    CHECK(three.values(2) == Approx(std::sqrt(2.0)));
    const Eigen::VectorXd w = three.coefficients(1).cwiseAbs2();
    CHECK(w(0) == Approx(0.25));
    CHECK(w(1) == Approx(0.5));
    CHECK(w(2) == Approx(0.25));

    const auto ring = eigendecompose(assemble_single_excitation(cycle_graph(4), uniform_params(cycle_graph(4), 0, 1)));
    CHECK(ring.values(0) == Approx(-2.0));
    CHECK(ring.values(1) == Approx(0.0));
    CHECK(ring.values(2) == Approx(0.0));
    CHECK(ring.values(3) == Approx(2.0));
    CHECK(min_gap(ring.values) == Approx(0.0));
  }

  TEST_CASE("non-symmetric input is rejected") {
    SymmetricMatrix m{{1, 2}, Eigen::MatrixXd(2, 2)};
    m.entries << 0, 1, 2, 0;
    CHECK(kind_of([&] { eigendecompose(m); }) == ErrorKind::Input);
  }

  TEST_CASE("gauge fixing") {
    const auto two = gauge_fix(eigendecompose(assemble_single_excitation(path_graph(2), uniform_params(path_graph(2), 0, 1))), 1);
    CHECK(two.coefficients(1)(0) > 0);
    CHECK(two.coefficients(1)(1) > 0);
    CHECK(two.gauge_reference == 1);

    const auto ring = eigendecompose(assemble_single_excitation(cycle_graph(4), uniform_params(cycle_graph(4), 0, 1)));
    CHECK(kind_of([&] { gauge_fix(ring, 1); }) == ErrorKind::GaugeDegeneracy);

    const auto three = eigendecompose(assemble_single_excitation(path_graph(3), uniform_params(path_graph(3), 0, 1)));
    CHECK(kind_of([&] { gauge_fix(three, 2); }) == ErrorKind::DarkState);
    CHECK(kind_of([&] { gauge_fix(three, 9); }) == ErrorKind::Input);
  }

  TEST_CASE("orthonormality of oracle data") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = random_unicyclic(5 + trial % 7, rng);
      const auto e = eigendecompose(assemble_single_excitation(g, random_params(g, rng)));
      for (NodeId m : g.nodes()) {
        for (NodeId n : g.nodes()) {
          CHECK(std::abs(e.coefficients(m).dot(e.coefficients(n)) - (m == n ? 1.0 : 0.0)) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("trace and second-moment identities") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = random_tree(3 + trial % 9, rng);
      const auto p = random_params(g, rng);
      const auto e = eigendecompose(assemble_single_excitation(g, p));
      double trace = 0;
      for (const auto& [n, b] : p.b) trace += b;
      CHECK(e.values.sum() == Approx(trace));
      for (NodeId n : g.nodes()) {
        const Eigen::VectorXd w = e.coefficients(n).cwiseAbs2();
        CHECK(w.dot(e.values) == Approx(p.b.at(n)));
        double coupled = 0;
        for (NodeId u : g.neighbors(n)) coupled += std::pow(p.c.at(EdgeKey::of(n, u)), 2);
        CHECK(w.dot((e.values.array() - p.b.at(n)).square().matrix()) == Approx(coupled));
      }
    }
  }
}
