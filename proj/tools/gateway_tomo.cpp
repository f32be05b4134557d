// gateway-tomo: command-line front end for gateway Hamiltonian tomography.
//
// Exit codes: 0 success, 1 method-level failure or not estimable, 2 input error.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gateway/error.hpp"
#include "gateway/estimation.hpp"
#include "gateway/graph.hpp"
#include "gateway/io.hpp"
#include "gateway/measurement.hpp"
#include "gateway/pipeline.hpp"
#include "gateway/reconstruction.hpp"
#include "gateway/spectral.hpp"

using namespace gateway;
using io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kMethodFailure = 1;
constexpr int kInputError = 2;

struct RunConfig {
  std::string graph;
  std::string params;
  std::string measurement;
  std::string signal;
  std::string out;
  std::string fit_out;
  std::optional<NodeId> reference;
  std::optional<double> shots;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<double> gamma;
  std::vector<NodeId> infect;
  std::optional<double> total_time;
  std::optional<double> dt;
  std::optional<std::size_t> n_peaks;
  double tol = 1e-8;
  std::optional<double> gap_tol;
  std::optional<double> overlap_tol;
  bool aggressive = false;
  std::string window = "rect";
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("gateway-tomo");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("GATEWAY_TOMO_LOG")) {
    const std::string level(env);
    if (level == "error" || level == "warn" || level == "info" || level == "debug") {
      spdlog::set_level(spdlog::level::from_str(level));
    } else {
      spdlog::warn("GATEWAY_TOMO_LOG={} not recognized; using warn", level);
    }
  }
}

std::string set_text(const NodeSet& s) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (NodeId n : s) {
    out << (first ? "" : ",") << n;
    first = false;
  }
  out << '}';
  return out.str();
}

std::string list_text(const std::vector<NodeId>& v) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  out << ']';
  return out.str();
}

NetworkGraph load_graph(const RunConfig& cfg) {
  if (cfg.graph.empty()) fail(ErrorKind::Input, "--graph is required");
  return io::graph_from_json(io::read_file(cfg.graph));
}

HamiltonianParams load_params(const RunConfig& cfg, const NetworkGraph& g) {
  if (cfg.params.empty()) fail(ErrorKind::Input, "--params is required");
  auto p = io::params_from_json(io::read_file(cfg.params));
  validate_params(g, p);
  return p;
}

PlanMode plan_mode(const RunConfig& cfg) { return cfg.aggressive ? PlanMode::Aggressive : PlanMode::Conservative; }

GaugeTolerances gauge_tolerances(const RunConfig& cfg) {
  GaugeTolerances t;
  if (cfg.gap_tol) t.gap_tol = *cfg.gap_tol;
  if (cfg.overlap_tol) t.overlap_tol = *cfg.overlap_tol;
  return t;
}

ReconstructOptions reconstruct_options(const RunConfig& cfg) {
  ReconstructOptions o;
  if (cfg.gap_tol) o.tol.gap_tol = *cfg.gap_tol;
  if (cfg.overlap_tol) o.tol.overlap_tol = *cfg.overlap_tol;
  return o;
}

std::optional<std::uint64_t> shot_count(const RunConfig& cfg) {
  if (!cfg.shots) return std::nullopt;
  const double s = *cfg.shots;
  if (!(s >= 1) || s != std::floor(s) || s > 1e18) fail(ErrorKind::Input, "--shots must be a positive integer");
  return static_cast<std::uint64_t>(s);
}

DecayModel decay_model(const RunConfig& cfg, std::size_t dim) {
  DecayModel d;
  if (cfg.gamma.empty()) {
    d.gamma.assign(dim, 0.0);
  } else if (cfg.gamma.size() == 1) {
    d.gamma.assign(dim, cfg.gamma.front());
  } else {
    d.gamma = cfg.gamma;
  }
  return d;
}

void emit(const RunConfig& cfg, const Json& j) {
  if (!cfg.out.empty()) {
    io::write_file(cfg.out, j);
    spdlog::info("wrote {}", cfg.out);
  }
}

Json failure_json(const Error& e) {
  return {{"flags", Json::array({std::string(to_string(e.kind()))})}, {"message", e.what()}};
}

// ---------------------------------------------------------------------------

int cmd_classify(const RunConfig& cfg) {
  const auto g = load_graph(cfg);
  const auto topo = classify_topology(g);
  const auto est = is_estimable(g);

  Json j;
  j["topology"] = std::string(to_string(topo.kind));
  if (topo.kind == TopologyClass::Kind::Unicyclic) j["cycle"] = topo.cycle;
  if (topo.kind == TopologyClass::Kind::MultiCycle) j["excess"] = topo.excess;
  j["estimable"] = est.estimable;
  if (!est.estimable) j["reason"] = est.reason;

  std::cout << to_string(topo.kind);
  if (topo.kind == TopologyClass::Kind::Unicyclic) std::cout << " (cycle " << list_text(topo.cycle) << ")";
  if (topo.kind == TopologyClass::Kind::MultiCycle) std::cout << " (" << topo.excess << " independent cycles)";
  if (est.estimable) {
    const auto plan = compute_access_plan(g, cfg.reference, plan_mode(cfg));
    j["access_set"] = plan.access_set;
    std::cout << ", estimable, access set " << set_text(plan.access_set) << '\n';
  } else {
    std::cout << ", not estimable: " << est.reason << '\n';
  }

  if (!cfg.infect.empty()) {
    const NodeSet seed(cfg.infect.begin(), cfg.infect.end());
    const auto closure = infection_closure(g, seed);
    j["infection"] = {{"seed", seed}, {"closure", closure}, {"infecting", closure.size() == g.size()}};
    std::cout << "closure of " << set_text(seed) << ": " << set_text(closure)
              << (closure.size() == g.size() ? " (infecting)" : " (stalls)") << '\n';
  }

  constexpr std::size_t kSmall = 16;
  if (g.size() <= kSmall) {
    const auto sets = minimum_infecting_sets(g, kSmall);
    Json arr = Json::array();
    for (const auto& s : sets) arr.push_back(s);
    j["minimum_infecting_sets"] = arr;
    if (!sets.empty()) {
      std::cout << "minimum infecting sets (size " << sets.front().size() << "):";
      for (const auto& s : sets) std::cout << ' ' << set_text(s);
      std::cout << '\n';
    }
  }
  emit(cfg, j);
  return est.estimable ? kOk : kMethodFailure;
}

int cmd_plan(const RunConfig& cfg) {
  const auto g = load_graph(cfg);
  const auto est = is_estimable(g);
  if (!est.estimable) {
    std::cout << "not estimable: " << est.reason << '\n';
    emit(cfg, {{"estimable", false}, {"reason", est.reason}});
    return kMethodFailure;
  }
  const auto plan = compute_access_plan(g, cfg.reference, plan_mode(cfg));
  std::cout << "reference " << plan.reference << ", access set " << set_text(plan.access_set) << '\n';
  std::cout << "reference path " << list_text(plan.reference_path) << '\n';
  for (const auto& b : plan.peel_schedule) {
    std::cout << "peel from " << b.leaf << ": " << list_text(b.nodes) << " -> " << b.terminal << '\n';
  }
  for (const auto& b : plan.bridges) std::cout << "bridge " << list_text(b) << '\n';
  if (plan.cycle_plan) {
    std::cout << "cycle " << list_text(plan.cycle_plan->cycle) << ", attachments "
              << set_text(plan.cycle_plan->attachments) << ", measured " << set_text(plan.cycle_plan->measured)
              << '\n';
  }
  if (plan.experimental) std::cout << "experimental plan: relies on junction sign chaining\n";
  emit(cfg, io::to_json(plan));
  return kOk;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto g = load_graph(cfg);
  const auto p = load_params(cfg, g);
  const auto est = is_estimable(g);
  if (!est.estimable) fail(ErrorKind::Capability, "not estimable: " + est.reason);
  const auto plan = compute_access_plan(g, cfg.reference, plan_mode(cfg));
  const auto eig = gauge_fix(eigendecompose(assemble_single_excitation(g, p)), plan.reference, gauge_tolerances(cfg));

  Json j;
  if (!cfg.times.empty()) {
    const auto series = measure_decaying(eig, plan.access_set, decay_model(cfg, g.size()), cfg.times);
    j = io::to_json(series);
    std::cout << "decaying measurement at " << set_text(plan.access_set) << ", " << cfg.times.size() << " times\n";
  } else if (const auto shots = shot_count(cfg)) {
    j = io::to_json(measure_shots(eig, plan.access_set, *shots, cfg.seed));
    std::cout << "shot measurement at " << set_text(plan.access_set) << ", " << *shots << " shots per site, seed "
              << cfg.seed << '\n';
  } else {
    j = io::to_json(measure_exact(eig, plan.access_set));
    std::cout << "exact measurement at " << set_text(plan.access_set) << '\n';
  }
  if (cfg.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    emit(cfg, j);
  }
  return kOk;
}

int cmd_spectrum(const RunConfig& cfg) {
  TimeSignal sig;
  std::optional<EigenSystem> truth;
  std::vector<std::string> extra_warnings;
  std::size_t n_peaks = 0;

  if (!cfg.signal.empty()) {
    if (!cfg.n_peaks) fail(ErrorKind::Input, "--n-peaks is required with --signal");
    sig = io::signal_from_json(io::read_file(cfg.signal));
    n_peaks = *cfg.n_peaks;
  } else {
    const auto g = load_graph(cfg);
    const auto p = load_params(cfg, g);
    if (!cfg.total_time || !cfg.dt) fail(ErrorKind::Input, "--T and --dt are required when simulating");
    truth = eigendecompose(assemble_single_excitation(g, p));
    NodeId reference = g.nodes().front();
    if (cfg.reference) {
      reference = *cfg.reference;
    } else if (is_estimable(g).estimable) {
      reference = compute_access_plan(g).reference;
    }
    const double emax = truth->values.cwiseAbs().maxCoeff();
    if (emax > 0 && *cfg.dt >= std::numbers::pi / emax) {
      std::ostringstream msg;
      msg << "aliasing: dt = " << *cfg.dt << " is not below pi/max|E| = " << std::numbers::pi / emax;
      extra_warnings.push_back(msg.str());
    }
    sig = signal_f11(*truth, reference, uniform_times(*cfg.total_time, *cfg.dt));
    n_peaks = cfg.n_peaks.value_or(g.size());
  }

  FftOptions opt;
  opt.window = cfg.window == "hann" ? Window::Hann : Window::Rectangular;
  SpectrumEstimate est;
  int code = kOk;
  try {
    est = estimate_spectrum_fft(sig, n_peaks, opt);
  } catch (const FewerPeaksError& e) {
    est = e.found();
    est.warnings.emplace_back(e.what());
    code = kMethodFailure;
  }
  est.warnings.insert(est.warnings.begin(), extra_warnings.begin(), extra_warnings.end());

  Json j = io::to_json(est);
  std::cout << est.peaks.size() << " peaks, resolution " << est.resolution << '\n';
  for (const auto& pk : est.peaks) std::printf("  E = %+.6f  w = %.6f\n", pk.energy, pk.weight);

  if (truth) {
    // Nearest estimated peak for every exact eigenvalue.
    Json cmp = Json::array();
    std::printf("  exact E     nearest peak   |dE|/resolution\n");
    for (Eigen::Index k = 0; k < truth->values.size(); ++k) {
      const double e = truth->values(k);
      const SpectralPeak* best = nullptr;
      for (const auto& pk : est.peaks) {
        if (!best || std::abs(pk.energy - e) < std::abs(best->energy - e)) best = &pk;
      }
      if (!best) break;
      const double off = std::abs(best->energy - e) / est.resolution;
      cmp.push_back({{"exact", e}, {"estimated", best->energy}, {"offset_resolutions", off}});
      std::printf("  %+.6f   %+.6f   %.3g\n", e, best->energy, off);
    }
    j["comparison"] = cmp;
  }
  for (const auto& w : est.warnings) spdlog::warn("{}", w);
  emit(cfg, j);
  return code;
}

int cmd_extrapolate(const RunConfig& cfg) {
  if (cfg.measurement.empty()) fail(ErrorKind::Input, "--measurement is required");
  const auto series = io::decaying_from_json(io::read_file(cfg.measurement));
  const auto fit = extrapolate_t0(series);
  const auto meas = extrapolated_measurement(series, fit);
  std::cout << "extrapolated " << fit.nodes.size() << " sites to t = 0\n";
  for (Eigen::Index j = 0; j < fit.gamma.size(); ++j) {
    std::printf("  E = %+.6f  gamma = %.6g\n", series.eigenvalues(j), fit.gamma(j));
  }
  for (const auto& w : fit.warnings) spdlog::warn("{}", w);
  emit(cfg, io::to_json(meas));
  if (!cfg.fit_out.empty()) io::write_file(cfg.fit_out, io::to_json(fit));
  return kOk;
}

int cmd_reconstruct(const RunConfig& cfg) {
  const auto g = load_graph(cfg);
  if (cfg.measurement.empty()) fail(ErrorKind::Input, "--measurement is required");
  const auto doc = io::read_file(cfg.measurement);
  SpectralMeasurement meas;
  const bool decaying = doc.is_object() && doc.contains("provenance") && doc["provenance"].is_object() &&
                        doc["provenance"].value("kind", "") == "decaying";
  if (decaying) {
    const auto series = io::decaying_from_json(doc);
    const auto fit = extrapolate_t0(series);
    for (const auto& w : fit.warnings) spdlog::warn("{}", w);
    meas = extrapolated_measurement(series, fit);
  } else {
    meas = io::measurement_from_json(doc);
  }

  try {
    const auto est = is_estimable(g);
    if (!est.estimable) fail(ErrorKind::Capability, "not estimable: " + est.reason);
    const auto plan = compute_access_plan(g, cfg.reference, plan_mode(cfg));
    const auto result = reconstruct(g, plan, meas, reconstruct_options(cfg));
    for (const auto& [n, b] : result.params.b) std::printf("  b[%d] = %+.10f\n", n, b);
    for (const auto& [e, c] : result.params.c) std::printf("  c[%s] = %+.10f\n", e.label().c_str(), c);
    for (const auto& f : result.flags) std::cout << "flag: " << f.to_string() << '\n';
    emit(cfg, io::to_json(result));
    return kOk;
  } catch (const Error& e) {
    if (e.is_input_error()) throw;
    std::cout << "failed: " << to_string(e.kind()) << ": " << e.what() << '\n';
    emit(cfg, failure_json(e));
    return kMethodFailure;
  }
}

int cmd_roundtrip(const RunConfig& cfg) {
  const auto g = load_graph(cfg);
  const auto p = load_params(cfg, g);
  RoundtripOptions opt;
  opt.reference = cfg.reference;
  opt.mode = plan_mode(cfg);
  opt.shots = shot_count(cfg);
  opt.seed = cfg.seed;
  if (!cfg.times.empty()) {
    opt.times = cfg.times;
    opt.gamma = decay_model(cfg, g.size()).gamma;
  }
  opt.tol = cfg.tol;
  opt.gauge = gauge_tolerances(cfg);
  opt.reconstruct = reconstruct_options(cfg);

  const auto r = run_roundtrip(g, p, opt);
  Json j;
  j["passed"] = r.passed;
  j["max_rel_error"] = std::isfinite(r.max_rel_error) ? Json(r.max_rel_error) : Json(nullptr);
  j["tol"] = cfg.tol;
  j["flags"] = r.flags;
  j["message"] = r.message;
  j["planted"] = io::to_json(p);
  if (r.plan) j["plan"] = io::to_json(*r.plan);
  if (r.result) j["estimated"] = io::to_json(*r.result);
  if (r.extrapolation) j["extrapolation"] = io::to_json(*r.extrapolation);

  if (r.result) {
    std::printf("  %-8s %14s %14s %10s\n", "param", "planted", "estimated", "|diff|");
    for (const auto& [n, b] : p.b) {
      const double e = r.result->params.b.at(n);
      std::printf("  b[%-5d] %+14.9f %+14.9f %10.3g\n", n, b, e, std::abs(e - b));
    }
    for (const auto& [k, c] : p.c) {
      const double e = r.result->params.c.at(k);
      std::printf("  c[%-5s] %+14.9f %+14.9f %10.3g\n", k.label().c_str(), c, e, std::abs(e - c));
    }
    std::printf("max relative error %.3g (tol %.3g)\n", r.max_rel_error, cfg.tol);
  }
  for (const auto& f : r.flags) std::cout << "flag: " << f << '\n';
  std::cout << (r.passed ? "PASS" : "FAIL") << ": " << r.message << '\n';
  emit(cfg, j);
  return r.passed ? kOk : kMethodFailure;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  RunConfig cfg;
  CLI::App app{"Gateway Hamiltonian tomography on pseudo-spin networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gateway-tomo 0.1.0");

  auto add_graph = [&](CLI::App* c) { c->add_option("--graph", cfg.graph, "graph JSON")->check(CLI::ExistingFile); };
  auto add_params = [&](CLI::App* c) { c->add_option("--params", cfg.params, "parameter JSON")->check(CLI::ExistingFile); };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", cfg.out, "write the JSON report here"); };
  auto add_reference = [&](CLI::App* c) { c->add_option("--reference", cfg.reference, "reference site"); };
  auto add_aggressive = [&](CLI::App* c) {
    c->add_flag("--aggressive-plan", cfg.aggressive, "experimental: drop leaves recoverable by sign chaining");
  };
  auto add_tolerances = [&](CLI::App* c) {
    c->add_option("--gap-tol", cfg.gap_tol, "degeneracy threshold, relative to the spectral range")
        ->check(CLI::PositiveNumber);
    c->add_option("--overlap-tol", cfg.overlap_tol, "dark-state threshold on |<E_j|ref>|")->check(CLI::PositiveNumber);
  };
  auto add_measure = [&](CLI::App* c) {
    c->add_option("--shots", cfg.shots, "shots per accessed site (multinomial sampling)")->check(CLI::PositiveNumber);
    c->add_option("--seed", cfg.seed, "random seed for shot sampling");
    c->add_option("--times", cfg.times, "decaying measurement sample times t0,t1,...")->delimiter(',');
    c->add_option("--gamma", cfg.gamma, "decay rates (one value or one per eigenstate)")->delimiter(',');
  };

  auto* classify = app.add_subcommand("classify", "topology class, estimability and access set");
  add_graph(classify);
  add_reference(classify);
  add_aggressive(classify);
  add_out(classify);
  classify->add_option("--infect", cfg.infect, "seed set for an infection closure, e.g. 1,5")->delimiter(',');

  auto* plan = app.add_subcommand("plan", "access plan and reconstruction schedule");
  add_graph(plan);
  add_reference(plan);
  add_aggressive(plan);
  add_out(plan);

  auto* simulate = app.add_subcommand("simulate", "simulate a measurement at the planned access set");
  add_graph(simulate);
  add_params(simulate);
  add_reference(simulate);
  add_aggressive(simulate);
  add_measure(simulate);
  add_tolerances(simulate);
  add_out(simulate);

  auto* spectrum = app.add_subcommand("spectrum", "estimate eigenvalues and weights from a reference signal");
  add_graph(spectrum);
  add_params(spectrum);
  add_reference(spectrum);
  add_out(spectrum);
  spectrum->add_option("--signal", cfg.signal, "signal JSON {times, re, im}")->check(CLI::ExistingFile);
  spectrum->add_option("--T", cfg.total_time, "total simulated time")->check(CLI::PositiveNumber);
  spectrum->add_option("--dt", cfg.dt, "sample step")->check(CLI::PositiveNumber);
  spectrum->add_option("--n-peaks", cfg.n_peaks, "number of peaks (default: number of sites)")
      ->check(CLI::PositiveNumber);
  spectrum->add_option("--window", cfg.window, "rect or hann")->check(CLI::IsMember({"rect", "hann"}));

  auto* extrapolate = app.add_subcommand("extrapolate", "fit decaying amplitudes back to t = 0");
  extrapolate->add_option("--measurement", cfg.measurement, "decaying measurement JSON")->check(CLI::ExistingFile);
  extrapolate->add_option("--fit-out", cfg.fit_out, "write fitted rates and residuals here");
  add_out(extrapolate);

  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "reconstruct fields and couplings from a measurement");
  add_graph(reconstruct_cmd);
  add_reference(reconstruct_cmd);
  add_aggressive(reconstruct_cmd);
  add_tolerances(reconstruct_cmd);
  add_out(reconstruct_cmd);
  reconstruct_cmd->add_option("--measurement", cfg.measurement, "measurement JSON")->check(CLI::ExistingFile);

  auto* roundtrip = app.add_subcommand("roundtrip", "simulate, reconstruct and compare with the planted parameters");
  add_graph(roundtrip);
  add_params(roundtrip);
  add_reference(roundtrip);
  add_aggressive(roundtrip);
  add_measure(roundtrip);
  add_tolerances(roundtrip);
  add_out(roundtrip);
  roundtrip->add_option("--tol", cfg.tol, "pass threshold on the max relative error")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*classify) return cmd_classify(cfg);
    if (*plan) return cmd_plan(cfg);
    if (*simulate) return cmd_simulate(cfg);
    if (*spectrum) return cmd_spectrum(cfg);
    if (*extrapolate) return cmd_extrapolate(cfg);
    if (*reconstruct_cmd) return cmd_reconstruct(cfg);
    if (*roundtrip) return cmd_roundtrip(cfg);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.kind()), e.what());
    return e.is_input_error() ? kInputError : kMethodFailure;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("InputError: {}", e.what());
    return kInputError;
  }
  return kInputError;
}
