#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gateway/estimation.hpp"
#include "gateway/graph.hpp"
#include "gateway/measurement.hpp"
#include "gateway/reconstruction.hpp"
#include "gateway/spectral.hpp"

namespace gateway {

struct RoundtripOptions {
  std::optional<NodeId> reference;
  PlanMode mode = PlanMode::Conservative;
  std::optional<std::uint64_t> shots;
  std::uint64_t seed = 0;
  /// Decaying measurement when set: sample times and per-eigenstate rates
  /// (a single rate is applied to every eigenstate).
  std::optional<std::vector<double>> times;
  std::vector<double> gamma;
  double tol = 1e-8;
  GaugeTolerances gauge;
  ReconstructOptions reconstruct;
};

struct RoundtripReport {
  bool passed = false;              // completed and max_rel_error < tol
  std::vector<std::string> flags;   // method-level failures and diagnostics
  std::string message;
  std::optional<AccessPlan> plan;
  std::optional<ReconstructionResult> result;
  std::optional<ExtrapolationFit> extrapolation;
  double max_rel_error = 0.0;
};

/// max |est - true| over all fields and couplings, divided by the largest
/// planted magnitude. Missing estimates count as infinite error.
double max_relative_error(const HamiltonianParams& truth, const HamiltonianParams& est);

/// assemble -> eigendecompose -> gauge fix -> plan -> measure -> (extrapolate)
/// -> reconstruct. Method-level failures are reported as flags; input errors
/// propagate as exceptions.
RoundtripReport run_roundtrip(const NetworkGraph& g, const HamiltonianParams& planted, const RoundtripOptions& opt);

}  // namespace gateway
