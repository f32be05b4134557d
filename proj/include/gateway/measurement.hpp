#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "gateway/graph.hpp"
#include "gateway/spectral.hpp"

namespace gateway {

struct Provenance {
  enum class Kind { Exact, Shots, Extrapolated };

  Kind kind = Kind::Exact;
  std::uint64_t count = 0;  // Shots
  std::uint64_t seed = 0;   // Shots
  std::vector<double> times;  // Extrapolated
};

/// Eigenvalues plus overlap moduli m_nj = |<E_j|n>| at the accessed sites.
struct SpectralMeasurement {
  Eigen::VectorXd eigenvalues;
  std::map<NodeId, Eigen::VectorXd> moduli;
  Provenance provenance;
};

/// Throws InputError unless eigenvalues strictly increase, every moduli
/// vector has the eigenvalue count, is nonnegative and normalized within
/// `norm_tol`.
void validate_measurement(const SpectralMeasurement& m, double norm_tol);

/// Per-eigenstate phenomenological decay rates Gamma_j.
struct DecayModel {
  std::vector<double> gamma;
};

/// Amplitudes a_nj(t_k) for every accessed node; `amplitudes[n][k](j)`.
struct DecayingMeasurement {
  Eigen::VectorXd eigenvalues;
  std::vector<double> times;
  std::map<NodeId, std::vector<Eigen::VectorXd>> amplitudes;
};

struct TimeSignal {
  std::vector<double> times;
  std::vector<std::complex<double>> values;
};

SpectralMeasurement measure_exact(const EigenSystem& e, const NodeSet& access);

/// Ideal projective sampling in the eigenbasis: a multinomial draw of `shots`
/// outcomes per accessed node, reported as sqrt(count_j / shots). Every node
/// draws from its own stream derived from (seed, node), so a node's record
/// does not depend on which other nodes are accessed.
SpectralMeasurement measure_shots(const EigenSystem& e, const NodeSet& access, std::uint64_t shots,
                                  std::uint64_t seed);

/// a_nj(t) = m_nj exp(-Gamma_j t / 2).
DecayingMeasurement measure_decaying(const EigenSystem& e, const NodeSet& access, const DecayModel& d,
                                     const std::vector<double>& times);

/// f(t) = sum_j exp(-i E_j t) |<E_j|reference>|^2.
TimeSignal signal_f11(const EigenSystem& e, NodeId reference, const std::vector<double>& times);

/// Evenly spaced times 0, dt, ..., below `total`.
std::vector<double> uniform_times(double total, double dt);

}  // namespace gateway
