#include "gateway/estimation.hpp"

#include <fftw3.h>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace gateway {

namespace {

using cplx = std::complex<double>;

class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  /// out[q] = sum_k in[k] exp(+2 pi i k q / n), input zero-padded to n.
  std::vector<cplx> run(const std::vector<cplx>& in) {
    for (std::size_t k = 0; k < n_; ++k) {
      const cplx v = k < in.size() ? in[k] : cplx{};
      buf_[k][0] = v.real();
      buf_[k][1] = v.imag();
    }
    fftw_execute(plan_);
    std::vector<cplx> out(n_);
    for (std::size_t k = 0; k < n_; ++k) out[k] = {buf_[k][0], buf_[k][1]};
    return out;
  }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
};

double sample_step(const std::vector<double>& t) {
  if (t.size() < 2) fail(ErrorKind::Input, "need at least two samples");
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0)) fail(ErrorKind::Input, "sample times must increase");
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double expect = t.front() + static_cast<double>(k) * dt;
    if (std::abs(t[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      fail(ErrorKind::Input, "sample times are not uniformly spaced");
    }
  }
  return dt;
}

// Least-squares complex amplitudes of exp(-i E t) tones; returns the residual.
std::vector<cplx> fit_amplitudes(const TimeSignal& sig, const std::vector<double>& energies,
                                 Eigen::VectorXcd& amplitudes) {
  const auto k = static_cast<Eigen::Index>(sig.times.size());
  const auto p = static_cast<Eigen::Index>(energies.size());
  Eigen::MatrixXcd a(k, p);
  Eigen::VectorXcd f(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    f(r) = sig.values[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < p; ++c) {
      a(r, c) = std::polar(1.0, -energies[static_cast<std::size_t>(c)] * sig.times[static_cast<std::size_t>(r)]);
    }
  }
  amplitudes = a.colPivHouseholderQr().solve(f);
  const Eigen::VectorXcd res = f - a * amplitudes;
  return {res.data(), res.data() + res.size()};
}

// Derivative of the windowed periodogram |X(E)|^2 of x, X(E) = sum w x exp(i E t).
double periodogram_slope(const TimeSignal& sig, const std::vector<cplx>& x, const std::vector<double>& window,
                         double e) {
  cplx value{};
  cplx slope{};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const cplx term = window[k] * x[k] * std::polar(1.0, e * sig.times[k]);
    value += term;
    slope += cplx(0.0, sig.times[k]) * term;
  }
  return 2.0 * (std::conj(value) * slope).real();
}

double periodogram(const TimeSignal& sig, const std::vector<cplx>& x, const std::vector<double>& window, double e) {
  cplx value{};
  for (std::size_t k = 0; k < x.size(); ++k) value += window[k] * x[k] * std::polar(1.0, e * sig.times[k]);
  return std::norm(value);
}

// Peak of the periodogram near `guess`: root of its slope when bracketed,
// plain maximization otherwise.
double locate_peak(const TimeSignal& sig, const std::vector<cplx>& x, const std::vector<double>& window,
                   double guess, double half_width) {
  const double lo = guess - half_width;
  const double hi = guess + half_width;
  const double f_lo = periodogram_slope(sig, x, window, lo);
  const double f_hi = periodogram_slope(sig, x, window, hi);
  if (f_lo > 0 && f_hi < 0) {
    std::uintmax_t iterations = 200;
    const auto root = boost::math::tools::toms748_solve(
        [&](double e) { return periodogram_slope(sig, x, window, e); }, lo, hi, f_lo, f_hi,
        boost::math::tools::eps_tolerance<double>(52), iterations);
    return 0.5 * (root.first + root.second);
  }
  return boost::math::tools::brent_find_minima([&](double e) { return -periodogram(sig, x, window, e); }, lo, hi, 52)
      .first;
}

// Cyclic refinement: each tone in turn is re-located on the continuous DTFT of
// the signal with all other tones removed, then amplitudes are refit jointly.
std::vector<cplx> refine_tones(const TimeSignal& sig, const std::vector<double>& window, double resolution,
                               std::vector<double>& energies, Eigen::VectorXcd& amplitudes) {
  auto residual = fit_amplitudes(sig, energies, amplitudes);
  for (int sweep = 0; sweep < 30; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < energies.size(); ++i) {
      std::vector<cplx> own = residual;
      const cplx amp = amplitudes(static_cast<Eigen::Index>(i));
      for (std::size_t k = 0; k < own.size(); ++k) own[k] += amp * std::polar(1.0, -energies[i] * sig.times[k]);
      const double best = locate_peak(sig, own, window, energies[i], 0.5 * resolution);
      moved = std::max(moved, std::abs(best - energies[i]));
      energies[i] = best;
      residual = fit_amplitudes(sig, energies, amplitudes);
    }
    if (moved < 1e-12 * resolution) break;
  }
  return residual;
}

}  // namespace

SpectrumEstimate estimate_spectrum_fft(const TimeSignal& sig, std::size_t n_peaks, const FftOptions& opt) {
  if (sig.times.size() != sig.values.size()) fail(ErrorKind::Input, "times and values differ in length");
  if (n_peaks == 0) fail(ErrorKind::Input, "n_peaks must be positive");
  if (sig.times.size() < 4 * n_peaks) fail(ErrorKind::Input, "need at least 4 samples per requested peak");
  if (opt.zero_pad < 1) fail(ErrorKind::Input, "zero padding factor must be >= 1");
  const double dt = sample_step(sig.times);
  const std::size_t count = sig.times.size();
  const std::size_t padded = count * static_cast<std::size_t>(opt.zero_pad);
  constexpr double pi = std::numbers::pi;

  SpectrumEstimate est;
  est.resolution = 2.0 * pi / (static_cast<double>(count) * dt);

  std::vector<double> window(count, 1.0);
  if (opt.window == Window::Hann && count > 1) {
    for (std::size_t k = 0; k < count; ++k) {
      window[k] = 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(k) / static_cast<double>(count - 1)));
    }
  }
  double window_sum = 0.0;
  for (double w : window) window_sum += w;

  auto freq_of = [&](double bin) {
    double q = bin;
    if (q > static_cast<double>(padded) / 2.0) q -= static_cast<double>(padded);
    return 2.0 * pi * q / (static_cast<double>(padded) * dt);
  };

  FftPlan fft(padded);
  std::vector<cplx> residual = sig.values;
  std::vector<double> energies;
  Eigen::VectorXcd amplitudes;
  double first_level = 0.0;

  for (std::size_t pick = 0; pick < n_peaks; ++pick) {
    std::vector<cplx> in(count);
    for (std::size_t k = 0; k < count; ++k) in[k] = residual[k] * window[k];
    const auto spec = fft.run(in);
    std::vector<double> mag(padded);
    for (std::size_t q = 0; q < padded; ++q) mag[q] = std::abs(spec[q]) / window_sum;

    std::size_t best = padded;
    for (std::size_t q = 0; q < padded; ++q) {
      const double left = mag[(q + padded - 1) % padded];
      const double right = mag[(q + 1) % padded];
      if (mag[q] >= left && mag[q] >= right && (best == padded || mag[q] > mag[best])) best = q;
    }
    if (pick == 0 && best != padded) first_level = mag[best];
    if (best == padded || mag[best] <= 1e-10 * first_level || mag[best] <= 1e-300) break;

    const double floor = 1e-300;
    const double a = std::log(std::max(mag[(best + padded - 1) % padded], floor));
    const double b = std::log(std::max(mag[best], floor));
    const double c = std::log(std::max(mag[(best + 1) % padded], floor));
    const double denom = a - 2.0 * b + c;
    const double delta = denom < 0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
    const double energy = freq_of(static_cast<double>(best) + delta);

    const bool duplicate = std::any_of(energies.begin(), energies.end(), [&](double e) {
      return std::abs(e - energy) < 1e-3 * est.resolution;
    });
    if (duplicate) break;
    energies.push_back(energy);
    residual = refine_tones(sig, window, est.resolution, energies, amplitudes);
  }

  for (std::size_t i = 0; i < energies.size(); ++i) {
    est.peaks.push_back({energies[i], std::abs(amplitudes(static_cast<Eigen::Index>(i)))});
  }
  std::sort(est.peaks.begin(), est.peaks.end(),
            [](const SpectralPeak& x, const SpectralPeak& y) { return x.energy < y.energy; });

  const double nyquist = pi / dt;
  for (const auto& p : est.peaks) {
    if (std::abs(p.energy) > nyquist - est.resolution) {
      std::ostringstream msg;
      msg << "aliasing: peak at " << p.energy << " lies at the band edge (+-" << nyquist << ")";
      est.warnings.push_back(msg.str());
    }
  }

  if (est.peaks.size() < n_peaks) {
    std::ostringstream msg;
    msg << "found " << est.peaks.size() << " of " << n_peaks << " requested peaks";
    throw FewerPeaksError(msg.str(), est);
  }
  return est;
}

ExtrapolationFit extrapolate_t0(const DecayingMeasurement& series) {
  const auto& t = series.times;
  const auto dim = series.eigenvalues.size();
  std::vector<double> sorted = t;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorKind::Input, "sample times must be distinct");
  }
  if (t.size() < 2) fail(ErrorKind::Underdetermined, "extrapolation needs at least two sample times");
  if (series.amplitudes.empty()) fail(ErrorKind::Input, "no amplitude series");

  const double nt = static_cast<double>(t.size());
  double t_mean = 0.0;
  for (double x : t) t_mean += x;
  t_mean /= nt;
  double sxx = 0.0;
  for (double x : t) sxx += (x - t_mean) * (x - t_mean);

  struct Line {
    Eigen::VectorXd mean_log, slope, own_rms;
  };
  std::map<NodeId, Line> lines;
  for (const auto& [node, amps] : series.amplitudes) {
    if (amps.size() != t.size()) fail(ErrorKind::Input, "amplitude series length differs from time count");
    Line line{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
    for (Eigen::Index j = 0; j < dim; ++j) {
      std::vector<double> y(t.size());
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (amps[k].size() != dim) fail(ErrorKind::Input, "amplitude vector length differs from eigenvalue count");
        const double a = amps[k](j);
        if (!(a > 0)) {
          fail(ErrorKind::Input, "nonpositive amplitude at node " + std::to_string(node) + ", eigenstate " +
                                     std::to_string(j));
        }
        y[k] = std::log(a);
      }
      double y_mean = 0.0;
      for (double v : y) y_mean += v;
      y_mean /= nt;
      double sxy = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) sxy += (t[k] - t_mean) * (y[k] - y_mean);
      const double slope = sxy / sxx;
      double ss = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = y[k] - (y_mean + slope * (t[k] - t_mean));
        ss += r * r;
      }
      line.mean_log(j) = y_mean;
      line.slope(j) = slope;
      line.own_rms(j) = std::sqrt(ss / nt);
    }
    lines.emplace(node, std::move(line));
  }

  ExtrapolationFit fit;
  fit.gamma = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& [node, line] : lines) {
      const double weight = std::exp(line.mean_log(j) - line.slope(j) * t_mean);
      num += weight * (-2.0 * line.slope(j));
      den += weight;
    }
    fit.gamma(j) = num / den;
  }

  for (const auto& [node, line] : lines) {
    NodeFit nf{Eigen::VectorXd::Zero(dim), -2.0 * line.slope, Eigen::VectorXd::Zero(dim)};
    const auto& amps = series.amplitudes.at(node);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double log_m0 = line.mean_log(j) + 0.5 * fit.gamma(j) * t_mean;
      nf.m0(j) = std::exp(log_m0);
      double ss = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = std::log(amps[k](j)) - (log_m0 - 0.5 * fit.gamma(j) * t[k]);
        ss += r * r;
      }
      nf.residual_rms(j) = std::sqrt(ss / nt);

      // Disagreement between this node's own rate and the pooled one, in
      // log-amplitude units accumulated over the sampled window.
      const double span = sorted.back() - sorted.front();
      const double disagreement = 0.5 * std::abs(nf.gamma(j) - fit.gamma(j)) * span;
      if (disagreement > 5.0 * std::max(line.own_rms(j), 1e-12)) {
        std::ostringstream msg;
        msg << "model-violation: node " << node << ", eigenstate " << j << " decays at " << nf.gamma(j)
            << " vs pooled " << fit.gamma(j);
        fit.warnings.push_back(msg.str());
      }
    }
    fit.nodes.emplace(node, std::move(nf));
  }
  return fit;
}

SpectralMeasurement extrapolated_measurement(const DecayingMeasurement& series, const ExtrapolationFit& fit) {
  SpectralMeasurement out;
  out.eigenvalues = series.eigenvalues;
  out.provenance.kind = Provenance::Kind::Extrapolated;
  out.provenance.times = series.times;
  for (const auto& [node, nf] : fit.nodes) out.moduli[node] = nf.m0.normalized();
  return out;
}

}  // namespace gateway
