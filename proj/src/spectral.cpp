#include "gateway/spectral.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gateway/error.hpp"

namespace gateway {

void validate_params(const NetworkGraph& g, const HamiltonianParams& p) {
  if (p.b.size() != g.size()) fail(ErrorKind::Input, "field count does not match node count");
  for (NodeId n : g.nodes()) {
    auto it = p.b.find(n);
    if (it == p.b.end()) fail(ErrorKind::Input, "missing field for node " + std::to_string(n));
    if (!std::isfinite(it->second)) fail(ErrorKind::Input, "non-finite field at node " + std::to_string(n));
  }
  if (p.c.size() != g.edge_count()) fail(ErrorKind::Input, "coupling count does not match edge count");
  for (const auto& e : g.edges()) {
    auto it = p.c.find(e);
    if (it == p.c.end()) fail(ErrorKind::Input, "missing coupling for edge " + e.label());
    const double c = it->second;
    if (!std::isfinite(c) || c == 0.0) fail(ErrorKind::Input, "zero coupling on edge " + e.label());
    if ((c > 0 ? 1 : -1) != g.sign(e)) fail(ErrorKind::Input, "coupling sign mismatch on edge " + e.label());
  }
}

std::size_t EigenSystem::row_of(NodeId n) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == n) return i;
  }
  fail(ErrorKind::Input, "unknown node " + std::to_string(n));
}

SymmetricMatrix assemble_single_excitation(const NetworkGraph& g, const HamiltonianParams& p) {
  validate_params(g, p);
  SymmetricMatrix m;
  m.nodes = g.nodes();
  const auto n = static_cast<Eigen::Index>(g.size());
  m.entries = Eigen::MatrixXd::Zero(n, n);
  for (NodeId node : g.nodes()) {
    const auto i = static_cast<Eigen::Index>(g.index_of(node));
    m.entries(i, i) = p.b.at(node);
  }
  for (const auto& e : g.edges()) {
    const auto i = static_cast<Eigen::Index>(g.index_of(e.u));
    const auto j = static_cast<Eigen::Index>(g.index_of(e.v));
    m.entries(i, j) = m.entries(j, i) = p.c.at(e);
  }
  return m;
}

EigenSystem eigendecompose(const SymmetricMatrix& m) {
  const auto& h = m.entries;
  if (h.rows() != h.cols() || static_cast<std::size_t>(h.rows()) != m.nodes.size()) {
    fail(ErrorKind::Input, "matrix shape does not match node list");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    fail(ErrorKind::Input, "matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigensolver did not converge");

  EigenSystem out;
  out.nodes = m.nodes;
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

double min_gap(const Eigen::VectorXd& values) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 1; j < values.size(); ++j) gap = std::min(gap, values(j) - values(j - 1));
  return gap;
}

EigenSystem gauge_fix(const EigenSystem& e, NodeId reference, const GaugeTolerances& tol) {
  const auto n = e.values.size();
  if (n >= 2) {
    const double range = e.values(n - 1) - e.values(0);
    const double gap = min_gap(e.values);
    if (gap <= tol.gap_tol * range) {
      std::ostringstream msg;
      msg << "degenerate spectrum: minimum gap " << gap << " (range " << range << ")";
      fail(ErrorKind::GaugeDegeneracy, msg.str());
    }
  }
  const auto row = static_cast<Eigen::Index>(e.row_of(reference));
  EigenSystem out = e;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = out.vectors(row, j);
    if (std::abs(v) <= tol.overlap_tol) {
      std::ostringstream msg;
      msg << "eigenvector " << j << " has vanishing overlap " << v << " with reference site " << reference;
      fail(ErrorKind::DarkState, msg.str());
    }
    if (v < 0) out.vectors.col(j) *= -1.0;
  }
  out.gauge_reference = reference;
  return out;
}

}  // namespace gateway
