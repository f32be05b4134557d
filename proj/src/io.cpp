#include "gateway/io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "gateway/error.hpp"

namespace gateway::io {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::Input, where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) fail(ErrorKind::Input, where + ": unknown field \"" + key + "\"");
  }
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::Input, where + ": missing field \"" + key + "\"");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(ErrorKind::Input, where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ErrorKind::Input, where + ": non-finite number");
  return v;
}

NodeId node_id(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(ErrorKind::Input, where + ": node ids must be integers");
  return j.get<NodeId>();
}

NodeId node_key(const std::string& key, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Input, where + ": \"" + key + "\" is not a node id");
  }
}

std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorKind::Input, where + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::VectorXd vector_of(const Json& j, const std::string& where) {
  const auto v = numbers(j, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json array_of(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Provenance provenance_from_json(const Json& j) {
  const std::string where = "provenance";
  check_keys(j, {"kind", "count", "seed", "times"}, where);
  const auto& kind = require(j, "kind", where);
  if (!kind.is_string()) fail(ErrorKind::Input, where + ".kind: expected a string");
  Provenance p;
  const auto k = kind.get<std::string>();
  if (k == "exact") {
    p.kind = Provenance::Kind::Exact;
  } else if (k == "shots") {
    p.kind = Provenance::Kind::Shots;
    p.count = require(j, "count", where).get<std::uint64_t>();
    p.seed = require(j, "seed", where).get<std::uint64_t>();
  } else if (k == "extrapolated") {
    p.kind = Provenance::Kind::Extrapolated;
    p.times = numbers(require(j, "times", where), where + ".times");
  } else {
    fail(ErrorKind::Input, where + ".kind: unknown kind \"" + k + "\"");
  }
  return p;
}

Json to_json(const Provenance& p) {
  switch (p.kind) {
    case Provenance::Kind::Exact: return Json{{"kind", "exact"}};
    case Provenance::Kind::Shots: return Json{{"kind", "shots"}, {"count", p.count}, {"seed", p.seed}};
    case Provenance::Kind::Extrapolated: return Json{{"kind", "extrapolated"}, {"times", p.times}};
  }
  return Json{};
}

}  // namespace

EdgeKey parse_edge_label(const std::string& label) {
  const auto dash = label.find('-', 1);
  if (dash == std::string::npos) fail(ErrorKind::Input, "edge key \"" + label + "\" is not of the form u-v");
  const NodeId u = node_key(label.substr(0, dash), "edge key");
  const NodeId v = node_key(label.substr(dash + 1), "edge key");
  if (!(u < v)) fail(ErrorKind::Input, "edge key \"" + label + "\" must have u < v");
  return {u, v};
}

NetworkGraph graph_from_json(const Json& j) {
  check_keys(j, {"nodes", "edges"}, "graph");
  const auto& nodes_j = require(j, "nodes", "graph");
  if (!nodes_j.is_array()) fail(ErrorKind::Input, "graph.nodes: expected an array");
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < nodes_j.size(); ++i) {
    nodes.push_back(node_id(nodes_j[i], "graph.nodes[" + std::to_string(i) + "]"));
  }
  const auto& edges_j = require(j, "edges", "graph");
  if (!edges_j.is_array()) fail(ErrorKind::Input, "graph.edges: expected an array");
  std::vector<SignedEdge> edges;
  for (std::size_t i = 0; i < edges_j.size(); ++i) {
    const std::string where = "graph.edges[" + std::to_string(i) + "]";
    const auto& e = edges_j[i];
    check_keys(e, {"u", "v", "sign"}, where);
    SignedEdge se;
    se.u = node_id(require(e, "u", where), where + ".u");
    se.v = node_id(require(e, "v", where), where + ".v");
    const auto& s = require(e, "sign", where);
    if (!s.is_number_integer() || (s.get<int>() != 1 && s.get<int>() != -1)) {
      fail(ErrorKind::Input, where + ".sign: must be 1 or -1");
    }
    se.sign = s.get<int>();
    edges.push_back(se);
  }
  return NetworkGraph(std::move(nodes), edges);
}

Json to_json(const NetworkGraph& g) {
  Json edges = Json::array();
  for (const auto& e : g.signed_edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"sign", e.sign}});
  return Json{{"nodes", g.nodes()}, {"edges", edges}};
}

HamiltonianParams params_from_json(const Json& j) {
  check_keys(j, {"b", "c"}, "params");
  HamiltonianParams p;
  const auto& b = require(j, "b", "params");
  if (!b.is_object()) fail(ErrorKind::Input, "params.b: expected an object");
  for (const auto& [key, value] : b.items()) p.b[node_key(key, "params.b")] = number(value, "params.b." + key);
  const auto& c = require(j, "c", "params");
  if (!c.is_object()) fail(ErrorKind::Input, "params.c: expected an object");
  for (const auto& [key, value] : c.items()) p.c[parse_edge_label(key)] = number(value, "params.c." + key);
  return p;
}

Json to_json(const HamiltonianParams& p) {
  Json b = Json::object();
  for (const auto& [n, v] : p.b) b[std::to_string(n)] = v;
  Json c = Json::object();
  for (const auto& [e, v] : p.c) c[e.label()] = v;
  return Json{{"b", b}, {"c", c}};
}

SpectralMeasurement measurement_from_json(const Json& j) {
  check_keys(j, {"eigenvalues", "moduli", "provenance"}, "measurement");
  SpectralMeasurement m;
  m.eigenvalues = vector_of(require(j, "eigenvalues", "measurement"), "measurement.eigenvalues");
  const auto& mod = require(j, "moduli", "measurement");
  if (!mod.is_object()) fail(ErrorKind::Input, "measurement.moduli: expected an object");
  for (const auto& [key, value] : mod.items()) {
    m.moduli[node_key(key, "measurement.moduli")] = vector_of(value, "measurement.moduli." + key);
  }
  if (j.contains("provenance")) m.provenance = provenance_from_json(j.at("provenance"));
  return m;
}

Json to_json(const SpectralMeasurement& m) {
  Json mod = Json::object();
  for (const auto& [n, v] : m.moduli) mod[std::to_string(n)] = array_of(v);
  return Json{{"eigenvalues", array_of(m.eigenvalues)}, {"moduli", mod}, {"provenance", to_json(m.provenance)}};
}

DecayingMeasurement decaying_from_json(const Json& j) {
  const std::string where = "decaying measurement";
  check_keys(j, {"eigenvalues", "times", "moduli", "provenance"}, where);
  DecayingMeasurement m;
  m.eigenvalues = vector_of(require(j, "eigenvalues", where), where + ".eigenvalues");
  m.times = numbers(require(j, "times", where), where + ".times");
  const auto& mod = require(j, "moduli", where);
  if (!mod.is_object()) fail(ErrorKind::Input, where + ".moduli: expected an object");
  for (const auto& [key, series] : mod.items()) {
    if (!series.is_array()) fail(ErrorKind::Input, where + ".moduli." + key + ": expected an array of arrays");
    auto& out = m.amplitudes[node_key(key, where + ".moduli")];
    for (std::size_t k = 0; k < series.size(); ++k) {
      out.push_back(vector_of(series[k], where + ".moduli." + key + "[" + std::to_string(k) + "]"));
    }
  }
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    check_keys(p, {"kind"}, where + ".provenance");
    if (p.value("kind", "") != "decaying") fail(ErrorKind::Input, where + ".provenance.kind: expected \"decaying\"");
  }
  return m;
}

Json to_json(const DecayingMeasurement& m) {
  Json mod = Json::object();
  for (const auto& [n, series] : m.amplitudes) {
    Json s = Json::array();
    for (const auto& v : series) s.push_back(array_of(v));
    mod[std::to_string(n)] = s;
  }
  return Json{{"eigenvalues", array_of(m.eigenvalues)},
              {"times", m.times},
              {"moduli", mod},
              {"provenance", {{"kind", "decaying"}}}};
}

TimeSignal signal_from_json(const Json& j) {
  check_keys(j, {"times", "re", "im"}, "signal");
  TimeSignal s;
  s.times = numbers(require(j, "times", "signal"), "signal.times");
  const auto re = numbers(require(j, "re", "signal"), "signal.re");
  const auto im = numbers(require(j, "im", "signal"), "signal.im");
  if (re.size() != s.times.size() || im.size() != s.times.size()) {
    fail(ErrorKind::Input, "signal: times, re and im must have equal length");
  }
  for (std::size_t k = 0; k < re.size(); ++k) s.values.emplace_back(re[k], im[k]);
  return s;
}

Json to_json(const TimeSignal& s) {
  Json re = Json::array();
  Json im = Json::array();
  for (const auto& v : s.values) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  return Json{{"times", s.times}, {"re", re}, {"im", im}};
}

Json to_json(const SpectrumEstimate& s) {
  Json peaks = Json::array();
  for (const auto& p : s.peaks) peaks.push_back({{"E", p.energy}, {"w", p.weight}});
  Json out{{"peaks", peaks}, {"resolution", s.resolution}};
  if (!s.warnings.empty()) out["warnings"] = s.warnings;
  return out;
}

SpectrumEstimate spectrum_from_json(const Json& j) {
  check_keys(j, {"peaks", "resolution", "warnings"}, "spectrum");
  SpectrumEstimate s;
  s.resolution = number(require(j, "resolution", "spectrum"), "spectrum.resolution");
  const auto& peaks = require(j, "peaks", "spectrum");
  if (!peaks.is_array()) fail(ErrorKind::Input, "spectrum.peaks: expected an array");
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const std::string where = "spectrum.peaks[" + std::to_string(i) + "]";
    check_keys(peaks[i], {"E", "w"}, where);
    s.peaks.push_back({number(require(peaks[i], "E", where), where + ".E"),
                       number(require(peaks[i], "w", where), where + ".w")});
  }
  if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

Json to_json(const AccessPlan& p) {
  Json peels = Json::array();
  for (const auto& b : p.peel_schedule) {
    peels.push_back({{"leaf", b.leaf}, {"path", b.nodes}, {"terminal", b.terminal}});
  }
  Json out{{"reference", p.reference},
           {"access_set", std::vector<NodeId>(p.access_set.begin(), p.access_set.end())},
           {"reference_path", p.reference_path},
           {"peel_schedule", peels},
           {"bridges", p.bridges}};
  if (p.cycle_plan) {
    out["cycle_plan"] = {
        {"cycle", p.cycle_plan->cycle},
        {"attachments", std::vector<NodeId>(p.cycle_plan->attachments.begin(), p.cycle_plan->attachments.end())},
        {"measured", std::vector<NodeId>(p.cycle_plan->measured.begin(), p.cycle_plan->measured.end())}};
  }
  if (p.experimental) out["experimental"] = true;
  return out;
}

Json to_json(const ExtrapolationFit& f) {
  Json nodes = Json::object();
  for (const auto& [n, nf] : f.nodes) {
    nodes[std::to_string(n)] = {
        {"m0", array_of(nf.m0)}, {"gamma", array_of(nf.gamma)}, {"residual_rms", array_of(nf.residual_rms)}};
  }
  return Json{{"gamma", array_of(f.gamma)}, {"nodes", nodes}, {"warnings", f.warnings}};
}

Json to_json(const ReconstructionResult& r) {
  Json out = to_json(r.params);
  Json residuals = Json::object();
  for (const auto& [k, v] : r.residuals) residuals[k] = v;
  out["residuals"] = residuals;
  Json flags = Json::array();
  for (const auto& f : r.flags) flags.push_back(f.to_string());
  out["flags"] = flags;
  if (r.cycle_diagnostics) {
    const auto& d = *r.cycle_diagnostics;
    out["cycle_diagnostics"] = {{"condition", d.condition},
                                {"moments_used", d.moments_used},
                                {"min_squared_coupling", d.min_squared_coupling},
                                {"rank_augmented", d.rank_augmented}};
  } else {
    out["cycle_diagnostics"] = Json::object();
  }
  return out;
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Input, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Input, path + ": " + e.what());
  }
}

void write_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Input, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace gateway::io
