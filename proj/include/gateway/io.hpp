#pragma once

#include <json.hpp>
#include <string>

#include "gateway/estimation.hpp"
#include "gateway/graph.hpp"
#include "gateway/measurement.hpp"
#include "gateway/reconstruction.hpp"
#include "gateway/spectral.hpp"

namespace gateway::io {

using Json = nlohmann::ordered_json;

// All readers throw ErrorKind::Input with the offending field in the message.

/// {"nodes":[1,2,...], "edges":[{"u":1,"v":2,"sign":1}, ...]}
NetworkGraph graph_from_json(const Json& j);
Json to_json(const NetworkGraph& g);

/// {"b":{"1":0.0,...}, "c":{"1-2":0.9,...}}, edge keys "u-v" with u < v.
HamiltonianParams params_from_json(const Json& j);
Json to_json(const HamiltonianParams& p);

/// {"eigenvalues":[...], "moduli":{"1":[...]}, "provenance":{"kind":"exact"}}
SpectralMeasurement measurement_from_json(const Json& j);
Json to_json(const SpectralMeasurement& m);

/// Same layout with "times":[...] and per-node arrays (over times) of arrays
/// (over eigenstates); provenance kind "decaying".
DecayingMeasurement decaying_from_json(const Json& j);
Json to_json(const DecayingMeasurement& m);

/// {"times":[...], "re":[...], "im":[...]}
TimeSignal signal_from_json(const Json& j);
Json to_json(const TimeSignal& s);

/// {"peaks":[{"E":...,"w":...}], "resolution":..., "warnings":[...]}
Json to_json(const SpectrumEstimate& s);
SpectrumEstimate spectrum_from_json(const Json& j);

Json to_json(const AccessPlan& p);
Json to_json(const ExtrapolationFit& f);

/// {"b":{...},"c":{...},"residuals":{...},"flags":[...],"cycle_diagnostics":{...}}
Json to_json(const ReconstructionResult& r);

/// Helpers for the "u-v" edge label convention.
EdgeKey parse_edge_label(const std::string& label);

Json read_file(const std::string& path);
void write_file(const std::string& path, const Json& j);

}  // namespace gateway::io
