#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "gateway/graph.hpp"

namespace gateway {

/// Local fields b_n and signed couplings c_mn (hbar = 1).
struct HamiltonianParams {
  std::map<NodeId, double> b;
  std::map<EdgeKey, double> c;
};

/// Checks that `p` covers exactly the nodes and edges of `g`, that every
/// coupling is nonzero and carries the declared sign.
void validate_params(const NetworkGraph& g, const HamiltonianParams& p);

/// Dense single-excitation Hamiltonian. Row/column r is node `nodes[r]`.
struct SymmetricMatrix {
  std::vector<NodeId> nodes;
  Eigen::MatrixXd entries;

  std::size_t dimension() const { return nodes.size(); }
};

/// Eigenvalues ascending; column j of `vectors` holds <E_j|n> over rows n.
struct EigenSystem {
  std::vector<NodeId> nodes;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  std::optional<NodeId> gauge_reference;

  std::size_t dimension() const { return nodes.size(); }
  std::size_t row_of(NodeId n) const;
  /// Coefficients <E_j|n> for all j.
  Eigen::VectorXd coefficients(NodeId n) const { return vectors.row(row_of(n)).transpose(); }
};

struct GaugeTolerances {
  double gap_tol = 1e-9;      // relative to the spectral range
  double overlap_tol = 1e-9;  // absolute, on |<E_j|reference>|
};

/// Diagonal b_n, off-diagonal c_mn on edges. The constant Zeeman offset of
/// the full spin Hamiltonian is dropped; it only shifts every E_j together.
SymmetricMatrix assemble_single_excitation(const NetworkGraph& g, const HamiltonianParams& p);

EigenSystem eigendecompose(const SymmetricMatrix& m);

/// Flips eigenvector columns so every component at `reference` is positive.
/// Throws GaugeDegeneracy for a (near-)degenerate spectrum and DarkState when
/// an eigenvector vanishes at the reference site.
EigenSystem gauge_fix(const EigenSystem& e, NodeId reference, const GaugeTolerances& tol = {});

/// Smallest gap between consecutive eigenvalues (infinity for N < 2).
double min_gap(const Eigen::VectorXd& ascending_values);

}  // namespace gateway
