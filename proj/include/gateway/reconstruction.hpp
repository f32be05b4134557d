#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gateway/graph.hpp"
#include "gateway/measurement.hpp"
#include "gateway/spectral.hpp"

namespace gateway {

struct ReconstructionTolerances {
  double c_tol = 1e-9;            // |c| below this is a near-zero division
  double norm_tol = 1e-8;         // normalization of measured moduli
  double overlap_tol = 1e-9;      // |<E_j|n>| needed for gauge and sign chaining
  double gap_tol = 1e-9;          // relative to the spectral range
  double slack_tol = 1e-10;       // relative to range^2, negative squared couplings
  double cond_limit = 1e10;       // cycle moment system
  double rank_tol = 1e-8;         // relative to range, third-moment leverage on even cycles
  double consistency_tol = 1e-7;  // relative residual above which InconsistentData is flagged
};

enum class CoefficientStatus { SignedTrue, PseudoSigned, ModulusOnly };

struct CoefficientEntry {
  Eigen::VectorXd values;  // <E_j|n>, exact or up to a per-j sign shared by the family
  CoefficientStatus status = CoefficientStatus::SignedTrue;
  NodeId family = 0;  // reference node for SignedTrue, seeding leaf otherwise
};

struct CoefficientTable {
  std::map<NodeId, CoefficientEntry> entries;
  /// Pseudo-signed vectors a peel computed for its terminal node. Kept apart
  /// from `entries` because the terminal's own record may come from elsewhere.
  std::multimap<NodeId, CoefficientEntry> terminals;
};

/// Couplings, fields and coefficients obtained along one path.
struct PathResult {
  std::map<EdgeKey, double> couplings;
  std::map<NodeId, double> fields;
  CoefficientTable table;
  std::optional<double> terminal_residual;  // closing eigen-equation, RMS
};

struct CycleDiagnostics {
  double condition = 0.0;
  std::vector<int> moments_used;  // {2} or {2, 3}
  double min_squared_coupling = 0.0;
  bool rank_augmented = false;
};

struct CycleSolution {
  std::map<EdgeKey, double> squared;  // x_e = c_e^2
  CycleDiagnostics diagnostics;
};

struct Flag {
  std::string name;
  std::optional<NodeId> node;

  std::string to_string() const;
  bool operator==(const Flag&) const = default;
};

struct ReconstructionResult {
  HamiltonianParams params;
  std::map<std::string, double> residuals;
  std::optional<CycleDiagnostics> cycle_diagnostics;
  std::vector<Flag> flags;
  CoefficientTable table;

  bool has_flag(const std::string& name) const;
};

struct ReconstructOptions {
  ReconstructionTolerances tol;
  /// Fields known a priori at accessed sites; only compared, never used.
  std::map<NodeId, double> known_fields;
};

/// b = sum_j E_j m_j^2.
double field_from_moduli(const Eigen::VectorXd& energies, const Eigen::VectorXd& moduli, double norm_tol = 1e-8);

/// Three-term recursion along `path`, starting from the gauge-fixed (positive)
/// reference moduli. Interior nodes must have degree 2 in the graph; the
/// terminal may be a junction. `signs[i]` is the declared sign of edge
/// (path[i], path[i+1]). When `closes` is set the terminal is a chain end and
/// its eigen-equation is reported as `terminal_residual`.
PathResult reconstruct_chain(const Eigen::VectorXd& energies, const Eigen::VectorXd& reference_moduli,
                             const std::vector<NodeId>& path, const std::vector<int>& signs, bool closes,
                             const ReconstructionTolerances& tol = {});

/// Same recursion started from a non-reference leaf. `path` runs from the leaf
/// to the terminal; the terminal gets no field and its coefficients are stored
/// under `table.terminals`. All vectors are PseudoSigned with family = leaf.
PathResult peel_branch(const Eigen::VectorXd& energies, const Eigen::VectorXd& leaf_moduli,
                       const std::vector<NodeId>& path, const std::vector<int>& signs,
                       const ReconstructionTolerances& tol = {});

/// Per-j sign that maps the family's pseudo vector at `junction` onto the
/// signed vector there; multiplies every member of the family and marks it
/// SignedTrue. Throws SignAmbiguity when |<E_j|junction>| is too small.
CoefficientTable resolve_family_signs(const CoefficientTable& table, NodeId junction, NodeId family,
                                      const ReconstructionTolerances& tol = {});

/// Second-moment system on the cycle, augmented with third central moments
/// when the cycle length is even. `table` must hold coefficients (any sign
/// status) for every cycle node and for every non-cycle neighbour of one;
/// `known` must hold every non-cycle coupling incident to the cycle.
CycleSolution solve_cycle_moments(const NetworkGraph& g, const CyclePlan& cycle, const CoefficientTable& table,
                                  const Eigen::VectorXd& energies, const std::map<EdgeKey, double>& known,
                                  const ReconstructionTolerances& tol = {});

/// Full procedure: reference chain, branch peels, junction sign chaining,
/// cycle moments, then fields and consistency residuals.
ReconstructionResult reconstruct(const NetworkGraph& g, const AccessPlan& plan, const SpectralMeasurement& meas,
                                 const ReconstructOptions& opt = {});

}  // namespace gateway
