#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "gateway/error.hpp"
#include "gateway/measurement.hpp"

namespace gateway {

enum class Window { Rectangular, Hann };

struct SpectralPeak {
  double energy = 0.0;
  double weight = 0.0;
};

struct SpectrumEstimate {
  std::vector<SpectralPeak> peaks;  // ascending energy
  double resolution = 0.0;          // 2 pi / (K dt)
  std::vector<std::string> warnings;
};

struct FftOptions {
  Window window = Window::Rectangular;
  int zero_pad = 16;  // padded length = zero_pad * sample count
};

/// Thrown when the signal shows fewer distinct peaks than requested.
class FewerPeaksError : public Error {
 public:
  FewerPeaksError(const std::string& what, SpectrumEstimate found)
      : Error(ErrorKind::FewerPeaks, what), found_(std::move(found)) {}
  const SpectrumEstimate& found() const { return found_; }

 private:
  SpectrumEstimate found_;
};

/// Peaks of the discrete Fourier transform of a uniformly sampled complex
/// signal f(t) = sum_j w_j exp(-i E_j t).
///
/// Peaks are taken one at a time from the magnitude spectrum of the residual
/// signal (largest local maximum first), refined by a 3-point quadratic fit of
/// the log magnitude on the zero-padded grid. After each pick, the complex
/// amplitudes of all picked tones are refit jointly by least squares and
/// subtracted, so sidelobes of strong tones are not mistaken for weak ones.
/// An isolated tone sitting exactly on its frequency reports its true weight.
SpectrumEstimate estimate_spectrum_fft(const TimeSignal& sig, std::size_t n_peaks,
                                       const FftOptions& opt = {});

/// Per-node log-linear fits of decaying amplitudes.
struct NodeFit {
  Eigen::VectorXd m0;            // extrapolated modulus at t = 0 (pooled rate)
  Eigen::VectorXd gamma;         // this node's own rate estimate
  Eigen::VectorXd residual_rms;  // log-amplitude residual of the pooled fit
};

struct ExtrapolationFit {
  std::map<NodeId, NodeFit> nodes;
  Eigen::VectorXd gamma;  // per eigenstate, amplitude-weighted over nodes
  std::vector<std::string> warnings;
};

/// Fits ln a_nj(t) = ln m_nj(0) - Gamma_j t / 2.
///
/// Each (node, j) series gets its own least-squares line first. Gamma_j is the
/// amplitude-weighted mean of the per-node rates, and the t = 0 moduli are then
/// refit with that shared rate. With a single node this is plain least squares.
ExtrapolationFit extrapolate_t0(const DecayingMeasurement& series);

/// Measurement record built from extrapolated moduli, each node renormalized
/// to unit length.
SpectralMeasurement extrapolated_measurement(const DecayingMeasurement& series, const ExtrapolationFit& fit);

}  // namespace gateway
