#include "gateway/pipeline.hpp"

#include <cmath>
#include <limits>

#include "gateway/error.hpp"

namespace gateway {

double max_relative_error(const HamiltonianParams& truth, const HamiltonianParams& est) {
  double scale = 0.0;
  for (const auto& [n, v] : truth.b) scale = std::max(scale, std::abs(v));
  for (const auto& [e, v] : truth.c) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;

  double worst = 0.0;
  for (const auto& [n, v] : truth.b) {
    auto it = est.b.find(n);
    if (it == est.b.end()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(it->second - v));
  }
  for (const auto& [e, v] : truth.c) {
    auto it = est.c.find(e);
    if (it == est.c.end()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(it->second - v));
  }
  return worst / scale;
}

RoundtripReport run_roundtrip(const NetworkGraph& g, const HamiltonianParams& planted, const RoundtripOptions& opt) {
  RoundtripReport report;
  try {
    const auto est = is_estimable(g);
    if (!est.estimable) fail(ErrorKind::Capability, "not estimable: " + est.reason);

    const auto eig = eigendecompose(assemble_single_excitation(g, planted));
    // Gauge first: a dark or degenerate reference is the physical failure,
    // whatever the planner would say about the site.
    const NodeId reference = opt.reference ? *opt.reference : compute_access_plan(g).reference;
    const auto fixed = gauge_fix(eig, reference, opt.gauge);
    const auto plan = compute_access_plan(g, opt.reference, opt.mode);
    report.plan = plan;

    SpectralMeasurement meas;
    if (opt.times) {
      DecayModel decay;
      decay.gamma = opt.gamma.size() == 1 ? std::vector<double>(g.size(), opt.gamma.front()) : opt.gamma;
      const auto series = measure_decaying(fixed, plan.access_set, decay, *opt.times);
      report.extrapolation = extrapolate_t0(series);
      meas = extrapolated_measurement(series, *report.extrapolation);
    } else if (opt.shots) {
      meas = measure_shots(fixed, plan.access_set, *opt.shots, opt.seed);
    } else {
      meas = measure_exact(fixed, plan.access_set);
    }

    report.result = reconstruct(g, plan, meas, opt.reconstruct);
    for (const auto& f : report.result->flags) report.flags.push_back(f.to_string());
    report.max_rel_error = max_relative_error(planted, report.result->params);
    report.passed = report.max_rel_error < opt.tol;
    report.message = report.passed ? "ok" : "error above tolerance";
  } catch (const Error& e) {
    if (e.is_input_error()) throw;
    report.flags.emplace_back(to_string(e.kind()));
    report.message = e.what();
    report.passed = false;
    report.max_rel_error = std::numeric_limits<double>::infinity();
  }
  return report;
}

}  // namespace gateway
