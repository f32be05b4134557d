#include <doctest.h>

#include <cstdio>
#include <random>

#include "gateway/error.hpp"
#include "gateway/io.hpp"
#include "gateway/measurement.hpp"
#include "support.hpp"

using namespace gateway;
using namespace gateway::testing;
using gateway::io::Json;

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

TEST_SUITE("io") {
  TEST_CASE("graph and params round trip") {
    const auto g = fmo_graph({1, -1, 1, 1, -1, 1, 1});
    const auto g2 = io::graph_from_json(Json::parse(io::to_json(g).dump()));
    CHECK(g2.nodes() == g.nodes());
    CHECK(g2.edges() == g.edges());
    for (const auto& e : g.edges()) CHECK(g2.sign(e) == g.sign(e));

    std::mt19937_64 rng(81);
    const auto p = random_params(g, rng);
    const auto p2 = io::params_from_json(Json::parse(io::to_json(p).dump()));
    CHECK(p2.b == p.b);
    CHECK(p2.c == p.c);
    CHECK(io::to_json(p)["c"].contains("4-7"));
  }

  TEST_CASE("measurements and signals round trip") {
    std::mt19937_64 rng(82);
    const auto g = fmo_graph();
    const auto e = gauge_fix(eigendecompose(assemble_single_excitation(g, random_params(g, rng))), 1);
    const auto m = measure_shots(e, {1, 5}, 1000, 9);
    const auto m2 = io::measurement_from_json(Json::parse(io::to_json(m).dump()));
    CHECK(m2.eigenvalues == m.eigenvalues);
    CHECK(m2.moduli == m.moduli);
    CHECK(m2.provenance.kind == Provenance::Kind::Shots);
    CHECK(m2.provenance.count == 1000);
    CHECK(m2.provenance.seed == 9);

    const auto d = measure_decaying(e, {1}, {std::vector<double>(7, 0.01)}, {0.0, 10.0});
    const auto d2 = io::decaying_from_json(Json::parse(io::to_json(d).dump()));
    CHECK(d2.times == d.times);
    CHECK(d2.amplitudes.at(1) == d.amplitudes.at(1));

    const auto s = signal_f11(e, 1, uniform_times(5.0, 0.5));
    const auto s2 = io::signal_from_json(Json::parse(io::to_json(s).dump()));
    CHECK(s2.times == s.times);
    CHECK(s2.values == s.values);

    SpectrumEstimate est{{{-1.0, 0.5}, {1.0, 0.5}}, 0.03, {"note"}};
    const auto est2 = io::spectrum_from_json(Json::parse(io::to_json(est).dump()));
    CHECK(est2.peaks.size() == 2);
    CHECK(est2.peaks[1].energy == 1.0);
    CHECK(est2.resolution == 0.03);
    CHECK(est2.warnings == est.warnings);
  }

  TEST_CASE("malformed documents name the offending field") {
    auto message = [](auto&& f) -> std::string {
      try {
        f();
      } catch (const Error& e) {
        CHECK(e.is_input_error());
        return e.what();
      }
      return "";
    };
    CHECK(message([] { io::graph_from_json(Json::parse(R"({"nodes":[1,2]})")); }).find("edges") != std::string::npos);
    CHECK(message([] { io::graph_from_json(Json::parse(R"({"nodes":[1,2],"edges":[],"x":1})")); }).find("\"x\"") !=
          std::string::npos);
    CHECK(message([] {
            io::graph_from_json(Json::parse(R"({"nodes":[1,2],"edges":[{"u":1,"v":2,"sign":2}]})"));
          }).find("sign") != std::string::npos);
    CHECK(message([] { io::params_from_json(Json::parse(R"({"b":{"1":0},"c":{"2-1":1}})")); }).find("2-1") !=
          std::string::npos);
    CHECK(message([] { io::params_from_json(Json::parse(R"({"b":{"a":0},"c":{}})")); }).find("\"a\"") !=
          std::string::npos);
    CHECK(kind_of([] { io::parse_edge_label("12"); }) == ErrorKind::Input);
    CHECK(io::parse_edge_label("3-10") == EdgeKey{3, 10});
    CHECK(kind_of([] { io::read_file("/nonexistent/graph.json"); }) == ErrorKind::Input);
  }

  TEST_CASE("files round trip and parse errors are input errors") {
    const std::string path = "gateway_io_test.json";
    io::write_file(path, io::to_json(path_graph(3)));
    CHECK(io::graph_from_json(io::read_file(path)).size() == 3);
    {
      std::FILE* f = std::fopen(path.c_str(), "w");
      std::fputs("{\"nodes\": [1,", f);
      std::fclose(f);
    }
    CHECK(kind_of([&] { io::read_file(path); }) == ErrorKind::Input);
    std::remove(path.c_str());
  }

  TEST_CASE("result document layout") {
    ReconstructionResult r;
    r.params.b = {{1, 0.5}};
    r.residuals["eq:1"] = 1e-15;
    r.flags.push_back({"RankAugmented", std::nullopt});
    const auto j = io::to_json(r);
    CHECK(j.contains("b"));
    CHECK(j.contains("c"));
    CHECK(j.contains("residuals"));
    CHECK(j["flags"][0] == "RankAugmented");
    CHECK(j.contains("cycle_diagnostics"));
  }
}
