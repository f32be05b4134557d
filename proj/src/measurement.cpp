#include "gateway/measurement.hpp"

#include <cmath>
#include <random>
#include <set>

#include "gateway/error.hpp"

namespace gateway {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_access(const EigenSystem& e, const NodeSet& access) {
  for (NodeId n : access) (void)e.row_of(n);
}

}  // namespace

void validate_measurement(const SpectralMeasurement& m, double norm_tol) {
  const auto n = m.eigenvalues.size();
  if (n == 0) fail(ErrorKind::Input, "measurement has no eigenvalues");
  for (Eigen::Index j = 1; j < n; ++j) {
    if (!(m.eigenvalues(j) > m.eigenvalues(j - 1))) {
      fail(ErrorKind::Input, "eigenvalues must be strictly increasing");
    }
  }
  for (const auto& [node, mod] : m.moduli) {
    const auto where = " at node " + std::to_string(node);
    if (mod.size() != n) fail(ErrorKind::Input, "moduli count differs from eigenvalue count" + where);
    if ((mod.array() < 0).any()) fail(ErrorKind::Input, "negative modulus" + where);
    if (std::abs(mod.squaredNorm() - 1.0) > norm_tol) {
      fail(ErrorKind::Input, "moduli not normalized" + where);
    }
  }
}

SpectralMeasurement measure_exact(const EigenSystem& e, const NodeSet& access) {
  check_access(e, access);
  SpectralMeasurement out;
  out.eigenvalues = e.values;
  for (NodeId n : access) out.moduli[n] = e.coefficients(n).cwiseAbs();
  return out;
}

SpectralMeasurement measure_shots(const EigenSystem& e, const NodeSet& access, std::uint64_t shots,
                                  std::uint64_t seed) {
  if (shots < 1) fail(ErrorKind::Input, "shots must be at least 1");
  check_access(e, access);
  SpectralMeasurement out;
  out.eigenvalues = e.values;
  out.provenance = {Provenance::Kind::Shots, shots, seed, {}};

  const auto dim = e.values.size();
  for (NodeId n : access) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(n))));
    const Eigen::VectorXd prob = e.coefficients(n).array().square();
    double mass_left = prob.sum();
    std::uint64_t left = shots;
    Eigen::VectorXd mod = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index j = 0; j < dim && left > 0; ++j) {
      std::uint64_t k = left;
      if (j + 1 < dim) {
        const double p = mass_left > 0 ? std::clamp(prob(j) / mass_left, 0.0, 1.0) : 0.0;
        std::binomial_distribution<std::uint64_t> draw(left, p);
        k = draw(rng);
      }
      mod(j) = std::sqrt(static_cast<double>(k) / static_cast<double>(shots));
      left -= k;
      mass_left -= prob(j);
    }
    out.moduli[n] = std::move(mod);
  }
  return out;
}

DecayingMeasurement measure_decaying(const EigenSystem& e, const NodeSet& access, const DecayModel& d,
                                     const std::vector<double>& times) {
  check_access(e, access);
  const auto dim = e.values.size();
  if (d.gamma.size() != static_cast<std::size_t>(dim)) {
    fail(ErrorKind::Input, "decay model needs one rate per eigenstate");
  }
  for (double g : d.gamma) {
    if (!(g >= 0)) fail(ErrorKind::Input, "decay rates must be nonnegative");
  }
  if (times.empty()) fail(ErrorKind::Input, "no sample times");
  std::set<double> distinct;
  for (double t : times) {
    if (!(t >= 0)) fail(ErrorKind::Input, "sample times must be nonnegative");
    if (!distinct.insert(t).second) fail(ErrorKind::Input, "sample times must be distinct");
  }

  DecayingMeasurement out;
  out.eigenvalues = e.values;
  out.times = times;
  const Eigen::Map<const Eigen::VectorXd> gamma(d.gamma.data(), dim);
  for (NodeId n : access) {
    const Eigen::VectorXd mod = e.coefficients(n).cwiseAbs();
    auto& series = out.amplitudes[n];
    for (double t : times) {
      Eigen::VectorXd a = mod;
      if (t != 0.0) a = mod.array() * (-gamma.array() * t / 2.0).exp();
      series.push_back(std::move(a));
    }
  }
  return out;
}

TimeSignal signal_f11(const EigenSystem& e, NodeId reference, const std::vector<double>& times) {
  const Eigen::VectorXd w = e.coefficients(reference).array().square();
  TimeSignal out;
  out.times = times;
  out.values.reserve(times.size());
  for (double t : times) {
    std::complex<double> f = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) f += w(j) * std::polar(1.0, -e.values(j) * t);
    out.values.push_back(f);
  }
  return out;
}

std::vector<double> uniform_times(double total, double dt) {
  if (!(dt > 0) || !(total > 0)) fail(ErrorKind::Input, "total time and step must be positive");
  const auto count = static_cast<std::size_t>(std::llround(std::floor(total / dt + 1e-9)));
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

}  // namespace gateway
