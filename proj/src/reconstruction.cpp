#include "gateway/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gateway/error.hpp"

namespace gateway {

std::string Flag::to_string() const {
  return node ? name + "(" + std::to_string(*node) + ")" : name;
}

bool ReconstructionResult::has_flag(const std::string& name) const {
  return std::any_of(flags.begin(), flags.end(), [&](const Flag& f) { return f.name == name; });
}

double field_from_moduli(const Eigen::VectorXd& energies, const Eigen::VectorXd& moduli, double norm_tol) {
  if (energies.size() != moduli.size()) fail(ErrorKind::Input, "moduli length differs from eigenvalue count");
  const Eigen::ArrayXd w = moduli.array().square();
  if (std::abs(w.sum() - 1.0) > norm_tol) fail(ErrorKind::Input, "moduli not normalized");
  return (energies.array() * w).sum();
}

namespace {

double weighted_mean(const Eigen::VectorXd& e, const Eigen::VectorXd& v) {
  return (e.array() * v.array().square()).sum();
}

double central_moment(const Eigen::VectorXd& e, const Eigen::VectorXd& v, double b, int k) {
  return ((e.array() - b).pow(k) * v.array().square()).sum();
}

double rms(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

[[noreturn]] void near_zero(NodeId at, NodeId toward, double c2) {
  std::ostringstream msg;
  msg << "coupling " << EdgeKey::of(at, toward).label() << " vanishes (c^2 = " << c2 << ") at node " << at;
  fail(ErrorKind::NearZeroDivision, msg.str());
}

// Three-term recursion shared by the reference chain and branch peels.
PathResult run_path(const Eigen::VectorXd& energies, const Eigen::VectorXd& start, const std::vector<NodeId>& path,
                    const std::vector<int>& signs, bool terminal_is_member, CoefficientStatus status,
                    const ReconstructionTolerances& tol) {
  if (path.empty()) fail(ErrorKind::Input, "empty path");
  if (signs.size() + 1 != path.size()) fail(ErrorKind::Input, "need one sign per path edge");
  if (start.size() != energies.size()) fail(ErrorKind::Input, "moduli length differs from eigenvalue count");
  for (int s : signs) {
    if (s != 1 && s != -1) fail(ErrorKind::Input, "edge signs must be +1 or -1");
  }

  PathResult out;
  const NodeId family = path.front();
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(energies.size());
  Eigen::VectorXd cur = start;
  double prev_c = 0.0;
  out.fields[path.front()] = field_from_moduli(energies, start, tol.norm_tol);
  out.table.entries[path.front()] = {start, status, family};

  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double b = weighted_mean(energies, cur);
    out.fields[path[i]] = b;
    const Eigen::VectorXd r = (energies.array() - b).matrix().cwiseProduct(cur) - prev_c * prev;
    const double c2 = r.squaredNorm();
    if (c2 < tol.c_tol * tol.c_tol) near_zero(path[i], path[i + 1], c2);
    const double c = signs[i] * std::sqrt(c2);
    out.couplings[EdgeKey::of(path[i], path[i + 1])] = c;
    prev = std::move(cur);
    cur = r / c;
    prev_c = c;

    const bool last = i + 2 == path.size();
    if (last && !terminal_is_member) {
      out.table.terminals.emplace(path[i + 1], CoefficientEntry{cur, status, family});
    } else {
      out.table.entries[path[i + 1]] = {cur, status, family};
    }
  }

  if (terminal_is_member && path.size() > 1) {
    out.fields[path.back()] = weighted_mean(energies, cur);
  }
  return out;
}

}  // namespace

PathResult reconstruct_chain(const Eigen::VectorXd& energies, const Eigen::VectorXd& reference_moduli,
                             const std::vector<NodeId>& path, const std::vector<int>& signs, bool closes,
                             const ReconstructionTolerances& tol) {
  auto out = run_path(energies, reference_moduli, path, signs, true, CoefficientStatus::SignedTrue, tol);
  if (closes) {
    const NodeId last = path.back();
    const Eigen::VectorXd& v = out.table.entries.at(last).values;
    Eigen::VectorXd r = (energies.array() - out.fields.at(last)).matrix().cwiseProduct(v);
    if (path.size() > 1) {
      const NodeId before = path[path.size() - 2];
      r -= out.couplings.at(EdgeKey::of(before, last)) * out.table.entries.at(before).values;
    }
    out.terminal_residual = rms(r);
  }
  return out;
}

PathResult peel_branch(const Eigen::VectorXd& energies, const Eigen::VectorXd& leaf_moduli,
                       const std::vector<NodeId>& path, const std::vector<int>& signs,
                       const ReconstructionTolerances& tol) {
  if (path.size() < 2) fail(ErrorKind::Input, "a branch needs a leaf and a terminal");
  return run_path(energies, leaf_moduli, path, signs, false, CoefficientStatus::PseudoSigned, tol);
}

namespace {

// Per-j sign mapping `pseudo` onto `target`; empty list when unambiguous.
std::vector<Eigen::Index> sign_ratio(const Eigen::VectorXd& target, const Eigen::VectorXd& pseudo, double overlap_tol,
                                     Eigen::VectorXd& s) {
  std::vector<Eigen::Index> ambiguous;
  s = Eigen::VectorXd::Ones(target.size());
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    if (std::abs(target(j)) <= overlap_tol || std::abs(pseudo(j)) <= overlap_tol) {
      ambiguous.push_back(j);
    } else if ((target(j) > 0) != (pseudo(j) > 0)) {
      s(j) = -1.0;
    }
  }
  return ambiguous;
}

std::string list_indices(const std::vector<Eigen::Index>& idx) {
  std::ostringstream out;
  for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "," : "") << idx[i];
  return out.str();
}

}  // namespace

CoefficientTable resolve_family_signs(const CoefficientTable& table, NodeId junction, NodeId family,
                                      const ReconstructionTolerances& tol) {
  auto signed_it = table.entries.find(junction);
  if (signed_it == table.entries.end() || signed_it->second.status != CoefficientStatus::SignedTrue) {
    fail(ErrorKind::Input, "junction " + std::to_string(junction) + " has no signed coefficients");
  }
  const CoefficientEntry* pseudo = nullptr;
  auto [lo, hi] = table.terminals.equal_range(junction);
  for (auto it = lo; it != hi; ++it) {
    if (it->second.family == family && it->second.status != CoefficientStatus::SignedTrue) pseudo = &it->second;
  }
  if (!pseudo) {
    fail(ErrorKind::Input, "family " + std::to_string(family) + " does not reach junction " + std::to_string(junction));
  }

  const auto& target = signed_it->second.values;
  Eigen::VectorXd s;
  const auto ambiguous = sign_ratio(target, pseudo->values, tol.overlap_tol, s);
  if (!ambiguous.empty()) {
    fail(ErrorKind::SignAmbiguity, "vanishing overlap at junction " + std::to_string(junction) +
                                       " for eigenstates " + list_indices(ambiguous));
  }
  const double mismatch = rms(target.cwiseAbs() - pseudo->values.cwiseAbs());
  if (mismatch > std::sqrt(tol.consistency_tol)) {
    fail(ErrorKind::InconsistentData, "family " + std::to_string(family) + " disagrees with junction " +
                                          std::to_string(junction) + " moduli");
  }

  CoefficientTable out = table;
  const NodeId signed_family = signed_it->second.family;
  auto promote = [&](CoefficientEntry& e) {
    if (e.family == family && e.status != CoefficientStatus::SignedTrue) {
      e.values = e.values.cwiseProduct(s);
      e.status = CoefficientStatus::SignedTrue;
      e.family = signed_family;
    }
  };
  for (auto& [n, e] : out.entries) promote(e);
  for (auto& [n, e] : out.terminals) promote(e);
  return out;
}

CycleSolution solve_cycle_moments(const NetworkGraph& g, const CyclePlan& plan, const CoefficientTable& table,
                                  const Eigen::VectorXd& energies, const std::map<EdgeKey, double>& known,
                                  const ReconstructionTolerances& tol) {
  const auto& cyc = plan.cycle;
  const auto len = static_cast<Eigen::Index>(cyc.size());
  if (len < 3) fail(ErrorKind::Input, "cycle needs at least three nodes");
  const NodeSet on_cycle(cyc.begin(), cyc.end());

  auto coeffs = [&](NodeId n) -> const Eigen::VectorXd& {
    auto it = table.entries.find(n);
    if (it == table.entries.end()) fail(ErrorKind::Input, "no coefficients for node " + std::to_string(n));
    return it->second.values;
  };
  auto field = [&](NodeId n) { return weighted_mean(energies, coeffs(n)); };
  auto edge_index = [&](NodeId a, NodeId b) -> Eigen::Index {
    for (Eigen::Index i = 0; i < len; ++i) {
      if (EdgeKey::of(cyc[i], cyc[(i + 1) % len]) == EdgeKey::of(a, b)) return i;
    }
    fail(ErrorKind::Input, "edge " + EdgeKey::of(a, b).label() + " not on cycle");
  };
  auto coupling = [&](NodeId a, NodeId b) {
    auto it = known.find(EdgeKey::of(a, b));
    if (it == known.end()) fail(ErrorKind::Input, "coupling " + EdgeKey::of(a, b).label() + " not yet known");
    return it->second;
  };

  const double range = energies.maxCoeff() - energies.minCoeff();
  const bool even = len % 2 == 0;

  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(len, len);
  Eigen::VectorXd second_rhs(len);
  Eigen::MatrixXd third = Eigen::MatrixXd::Zero(len, len);
  Eigen::VectorXd third_rhs(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const NodeId n = cyc[i];
    const auto& v = coeffs(n);
    const double b = field(n);
    double rhs2 = central_moment(energies, v, b, 2);
    double rhs3 = central_moment(energies, v, b, 3);
    for (NodeId u : g.neighbors(n)) {
      if (on_cycle.contains(u)) {
        const auto e = edge_index(n, u);
        second(i, e) = 1.0;
        third(i, e) = field(u) - b;
      } else {
        const double c = coupling(n, u);
        rhs2 -= c * c;
        rhs3 -= c * c * (field(u) - b);
      }
    }
    second_rhs(i) = rhs2;
    third_rhs(i) = rhs3;
  }

  CycleSolution out;
  out.diagnostics.moments_used = {2};
  Eigen::MatrixXd a = second / std::sqrt(2.0);
  Eigen::VectorXd y = second_rhs / std::sqrt(2.0);

  if (even) {
    // Second moments only fix x up to the alternating edge vector.
    Eigen::VectorXd alternating(len);
    for (Eigen::Index i = 0; i < len; ++i) alternating(i) = i % 2 == 0 ? 1.0 : -1.0;
    alternating.normalize();
    const double leverage = (third * alternating).cwiseAbs().maxCoeff();
    if (!(leverage > tol.rank_tol * range)) {
      fail(ErrorKind::RankDeficientUnresolvable,
           "even cycle: fields around the cycle are indistinguishable, third moments carry no information");
    }
    out.diagnostics.moments_used.push_back(3);
    out.diagnostics.rank_augmented = true;
    const auto rows = a.rows();
    a.conservativeResize(rows + len, Eigen::NoChange);
    y.conservativeResize(rows + len);
    for (Eigen::Index i = 0; i < len; ++i) {
      const double norm = third.row(i).norm();
      if (norm > 0) {
        a.row(rows + i) = third.row(i) / norm;
        y(rows + i) = third_rhs(i) / norm;
      } else {
        a.row(rows + i).setZero();
        y(rows + i) = 0.0;
      }
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  out.diagnostics.condition = smallest > 0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  if (!(out.diagnostics.condition <= tol.cond_limit)) {
    std::ostringstream msg;
    msg << "cycle moment system condition number " << out.diagnostics.condition;
    fail(ErrorKind::IllConditioned, msg.str());
  }
  const Eigen::VectorXd x = svd.solve(y);

  const double slack = tol.slack_tol * range * range;
  out.diagnostics.min_squared_coupling = x.minCoeff();
  for (Eigen::Index i = 0; i < len; ++i) {
    const auto e = EdgeKey::of(cyc[i], cyc[(i + 1) % len]);
    if (x(i) < -slack) {
      std::ostringstream msg;
      msg << "negative squared coupling " << x(i) << " on cycle edge " << e.label();
      fail(ErrorKind::InconsistentData, msg.str());
    }
    out.squared[e] = std::max(x(i), 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

/// Coefficient vectors known up to a per-j sign shared within a family.
/// Families merge when two of them meet at a node; family 0 is the gauge
/// fixed by the reference site.
class Propagator {
 public:
  Propagator(const NetworkGraph& g, const Eigen::VectorXd& energies, const ReconstructionTolerances& tol)
      : g_(g), e_(energies), tol_(tol) {
    const double range = energies.maxCoeff() - energies.minCoeff();
    scale_ = std::max({range, energies.cwiseAbs().maxCoeff(), 1e-300});
  }

  int new_family(NodeId label, bool measured_only) {
    parent_.push_back(static_cast<int>(parent_.size()));
    rel_.push_back(Eigen::VectorXd::Ones(e_.size()));
    label_.push_back(label);
    measured_only_.push_back(measured_only);
    return parent_.back();
  }

  bool has_vector(NodeId n) const { return vec_.contains(n); }
  bool has_coupling(EdgeKey e) const { return c_.contains(e); }
  const std::map<EdgeKey, double>& couplings() const { return c_; }
  const std::map<NodeId, double>& fields() const { return b_; }
  std::map<std::string, double>& residuals() { return residuals_; }
  double scale() const { return scale_; }

  void load(const PathResult& path, int family) {
    for (const auto& [e, c] : path.couplings) c_[e] = c;
    for (const auto& [n, entry] : path.table.entries) {
      if (!vec_.contains(n)) {
        set_vector(n, entry.values, family);
      } else {
        offer(n, entry.values, family);
      }
    }
    for (const auto& [n, entry] : path.table.terminals) offer(n, entry.values, family);
  }

  void set_coupling(EdgeKey e, double c) { c_[e] = c; }

  void mark_fired(NodeId from, NodeId to) { fired_.insert({from, to}); }

  void seed(NodeId n, const Eigen::VectorXd& moduli, int family) {
    if (vec_.contains(n)) {
      offer(n, moduli, family);
    } else {
      set_vector(n, moduli, family);
    }
  }

  /// One sweep of the propagation rules; true when anything was learned.
  bool sweep() {
    bool changed = false;
    for (NodeId n : g_.nodes()) {
      if (!vec_.contains(n)) continue;
      const auto& nb = g_.neighbors(n);
      std::vector<NodeId> unknown;
      for (NodeId m : nb) {
        if (!c_.contains(EdgeKey::of(n, m))) unknown.push_back(m);
      }
      if (unknown.size() > 1) continue;

      std::vector<NodeId> outside;
      for (NodeId m : nb) {
        if (!vec_.contains(m) || !same_root(fam_.at(m), fam_.at(n))) outside.push_back(m);
      }

      if (unknown.size() == 1) {
        const NodeId u = unknown.front();
        const auto key = EdgeKey::of(n, u);
        const bool vector_rule = outside.empty() || (outside.size() == 1 && outside.front() == u);
        if (vector_rule) {
          const Eigen::VectorXd r = residual_vector(n, u);
          const double c2 = r.squaredNorm();
          if (c2 < tol_.c_tol * tol_.c_tol) near_zero(n, u, c2);
          const double c = g_.sign(key) * std::sqrt(c2);
          c_[key] = c;
          fired_.insert({n, u});
          offer(u, r / c, fam_.at(n));
        } else {
          // Signs of the neighbours are not mutually known yet, but the
          // second moment at n still fixes |c| on the last unknown edge.
          double c2 = central_moment(e_, vec_.at(n), b_.at(n), 2);
          for (NodeId m : nb) {
            if (m != u) c2 -= c_.at(EdgeKey::of(n, m)) * c_.at(EdgeKey::of(n, m));
          }
          if (c2 < tol_.c_tol * tol_.c_tol) near_zero(n, u, c2);
          c_[key] = g_.sign(key) * std::sqrt(c2);
        }
        changed = true;
      } else if (outside.size() == 1 && !fired_.contains({n, outside.front()})) {
        const NodeId u = outside.front();
        fired_.insert({n, u});
        offer(u, residual_vector(n, u) / c_.at(EdgeKey::of(n, u)), fam_.at(n));
        changed = true;
      }
    }
    return changed;
  }

  /// Vector in the gauge of the family root.
  Eigen::VectorXd in_root(NodeId n) const {
    auto [root, sigma] = find(fam_.at(n));
    return sigma.cwiseProduct(vec_.at(n));
  }

  bool same_root(int a, int b) const { return find(a).first == find(b).first; }
  int family_of(NodeId n) const { return fam_.at(n); }
  int root_of(NodeId n) const { return find(fam_.at(n)).first; }

  CoefficientTable table() const {
    CoefficientTable t;
    std::map<int, int> members;
    for (const auto& [n, f] : fam_) ++members[find(f).first];
    for (const auto& [n, f] : fam_) {
      const int root = find(f).first;
      CoefficientEntry entry{in_root(n), CoefficientStatus::PseudoSigned, label_[root]};
      if (root == 0) {
        entry.status = CoefficientStatus::SignedTrue;
      } else if (members[root] == 1 && measured_only_[root]) {
        entry.status = CoefficientStatus::ModulusOnly;
      }
      t.entries[n] = std::move(entry);
    }
    return t;
  }

  const std::vector<std::string>& ambiguities() const { return ambiguities_; }

 private:
  std::pair<int, Eigen::VectorXd> find(int f) const {
    Eigen::VectorXd sigma = Eigen::VectorXd::Ones(e_.size());
    while (parent_[f] != f) {
      sigma = sigma.cwiseProduct(rel_[f]);
      f = parent_[f];
    }
    return {f, sigma};
  }

  // Vector of node w expressed in family f's gauge (same root required).
  Eigen::VectorXd in_family(NodeId w, int f) const {
    auto [rf, sf] = find(f);
    auto [rw, sw] = find(fam_.at(w));
    return sf.cwiseProduct(sw).cwiseProduct(vec_.at(w));
  }

  // (E - b_n) v_n - sum over known neighbours other than `skip`, in n's family.
  Eigen::VectorXd residual_vector(NodeId n, NodeId skip) const {
    const int f = fam_.at(n);
    Eigen::VectorXd r = (e_.array() - b_.at(n)).matrix().cwiseProduct(vec_.at(n));
    for (NodeId m : g_.neighbors(n)) {
      if (m == skip) continue;
      r -= c_.at(EdgeKey::of(n, m)) * in_family(m, f);
    }
    return r;
  }

  void set_vector(NodeId n, const Eigen::VectorXd& v, int f) {
    vec_[n] = v;
    fam_[n] = f;
    b_[n] = weighted_mean(e_, v);
  }

  void offer(NodeId n, const Eigen::VectorXd& v, int f) {
    if (!vec_.contains(n)) {
      set_vector(n, v, f);
      return;
    }
    const int g = fam_.at(n);
    auto [rf, sf] = find(f);
    auto [rg, sg] = find(g);
    const Eigen::VectorXd existing = vec_.at(n);
    double mismatch = 0.0;
    if (rf == rg) {
      mismatch = rms(sf.cwiseProduct(v) - sg.cwiseProduct(existing));
    } else {
      mismatch = rms(v.cwiseAbs() - existing.cwiseAbs());
      Eigen::VectorXd s;
      const auto ambiguous = sign_ratio(existing, v, tol_.overlap_tol, s);
      if (!ambiguous.empty()) {
        ambiguities_.push_back("node " + std::to_string(n) + ", eigenstates " + list_indices(ambiguous));
      } else {
        // v_rg = sg . v_g = sg . s . v_f = sg . s . sf . v_rf
        const Eigen::VectorXd rel = sg.cwiseProduct(s).cwiseProduct(sf);
        if (rf == 0) {
          parent_[rg] = rf;
          rel_[rg] = rel;
        } else {
          parent_[rf] = rg;
          rel_[rf] = rel;
        }
      }
    }
    auto& slot = residuals_["coef:" + std::to_string(n)];
    slot = std::max(slot, mismatch);
  }

  const NetworkGraph& g_;
  const Eigen::VectorXd& e_;
  ReconstructionTolerances tol_;
  double scale_ = 1.0;

  std::map<NodeId, Eigen::VectorXd> vec_;
  std::map<NodeId, int> fam_;
  std::map<NodeId, double> b_;
  std::map<EdgeKey, double> c_;
  std::set<std::pair<NodeId, NodeId>> fired_;
  std::map<std::string, double> residuals_;
  std::vector<std::string> ambiguities_;

  std::vector<int> parent_;
  std::vector<Eigen::VectorXd> rel_;
  std::vector<NodeId> label_;
  std::vector<bool> measured_only_;
};

std::vector<int> path_signs(const NetworkGraph& g, const std::vector<NodeId>& path) {
  std::vector<int> s;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) s.push_back(g.sign(path[i], path[i + 1]));
  return s;
}

}  // namespace

ReconstructionResult reconstruct(const NetworkGraph& g, const AccessPlan& plan, const SpectralMeasurement& meas,
                                 const ReconstructOptions& opt) {
  const auto& tol = opt.tol;
  const auto& energies = meas.eigenvalues;
  if (static_cast<std::size_t>(energies.size()) != g.size()) {
    fail(ErrorKind::Input, "eigenvalue count " + std::to_string(energies.size()) + " differs from node count " +
                               std::to_string(g.size()));
  }
  for (NodeId n : plan.access_set) {
    if (!meas.moduli.contains(n)) fail(ErrorKind::Input, "missing measurement for accessed node " + std::to_string(n));
  }
  validate_measurement(meas, tol.norm_tol);

  const auto dim = energies.size();
  const double range = dim > 1 ? energies(dim - 1) - energies(0) : 0.0;
  if (dim > 1 && min_gap(energies) <= tol.gap_tol * range) {
    fail(ErrorKind::GaugeDegeneracy, "degenerate spectrum; eigenvector gauge cannot be fixed");
  }
  const Eigen::VectorXd& ref_moduli = meas.moduli.at(plan.reference);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (ref_moduli(j) <= tol.overlap_tol) {
      fail(ErrorKind::DarkState, "eigenstate " + std::to_string(j) + " is dark at reference site " +
                                     std::to_string(plan.reference));
    }
  }

  ReconstructionResult result;
  Propagator prop(g, energies, tol);

  const int gauge = prop.new_family(plan.reference, false);
  const auto& ref_path = plan.reference_path;
  const bool closes = ref_path.size() == g.size() && g.degree(ref_path.back()) <= 1;
  const auto chain = reconstruct_chain(energies, ref_moduli, ref_path, path_signs(g, ref_path), closes, tol);
  prop.load(chain, gauge);
  for (std::size_t i = 0; i + 1 < ref_path.size(); ++i) prop.mark_fired(ref_path[i], ref_path[i + 1]);
  if (chain.terminal_residual) prop.residuals()["terminal:" + std::to_string(ref_path.back())] = *chain.terminal_residual;

  for (const auto& branch : plan.peel_schedule) {
    auto path = branch.nodes;
    path.push_back(branch.terminal);
    const auto peel = peel_branch(energies, meas.moduli.at(branch.leaf), path, path_signs(g, path), tol);
    prop.load(peel, prop.new_family(branch.leaf, false));
    for (std::size_t i = 0; i + 1 < path.size(); ++i) prop.mark_fired(path[i], path[i + 1]);
  }

  for (NodeId n : plan.access_set) {
    if (!prop.has_vector(n)) prop.seed(n, meas.moduli.at(n), prop.new_family(n, true));
  }

  bool cycle_done = !plan.cycle_plan.has_value();
  while (true) {
    bool changed = prop.sweep();
    if (!cycle_done) {
      const auto& cp = *plan.cycle_plan;
      const NodeSet on_cycle(cp.cycle.begin(), cp.cycle.end());
      bool ready = true;
      for (NodeId n : cp.cycle) {
        if (!prop.has_vector(n)) ready = false;
        for (NodeId u : g.neighbors(n)) {
          if (!on_cycle.contains(u) && (!prop.has_coupling(EdgeKey::of(n, u)) || !prop.has_vector(u))) ready = false;
        }
      }
      if (ready) {
        const auto solution = solve_cycle_moments(g, cp, prop.table(), energies, prop.couplings(), tol);
        for (const auto& [e, x] : solution.squared) {
          if (x < tol.c_tol * tol.c_tol) near_zero(e.u, e.v, x);
          // Feed the cycle couplings back so the sweep can chain signs across it.
          prop.set_coupling(e, g.sign(e) * std::sqrt(x));
        }
        result.cycle_diagnostics = solution.diagnostics;
        if (solution.diagnostics.rank_augmented) result.flags.push_back({"RankAugmented", std::nullopt});
        cycle_done = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  for (const auto& e : g.edges()) {
    if (!prop.has_coupling(e)) {
      if (!prop.ambiguities().empty()) {
        fail(ErrorKind::SignAmbiguity, "coupling " + e.label() + " unresolved; sign chaining failed at " +
                                           prop.ambiguities().front());
      }
      fail(ErrorKind::Capability, "access plan does not determine coupling " + e.label());
    }
  }
  for (NodeId n : g.nodes()) {
    if (!prop.fields().contains(n)) fail(ErrorKind::Capability, "access plan does not determine field at node " +
                                                                    std::to_string(n));
  }

  result.params.b = prop.fields();
  result.params.c = prop.couplings();
  result.table = prop.table();

  // Consistency of every eigen-equation we can evaluate.
  auto& res = prop.residuals();
  const double scale = prop.scale();
  bool inconsistent = false;
  for (const auto& [key, value] : res) {
    if (value > tol.consistency_tol) inconsistent = true;
  }
  for (NodeId n : g.nodes()) {
    const auto& entry = result.table.entries.at(n);
    const double b = result.params.b.at(n);
    double moment = central_moment(energies, entry.values, b, 2);
    bool full = true;
    Eigen::VectorXd r = (energies.array() - b).matrix().cwiseProduct(entry.values);
    for (NodeId u : g.neighbors(n)) {
      const double c = result.params.c.at(EdgeKey::of(n, u));
      moment -= c * c;
      if (prop.root_of(u) != prop.root_of(n)) {
        full = false;
      } else {
        r -= c * result.table.entries.at(u).values;
      }
    }
    const double moment_res = std::abs(moment);
    res["moment:" + std::to_string(n)] = moment_res;
    if (moment_res > tol.consistency_tol * scale * scale) inconsistent = true;
    if (full) {
      const double eq = rms(r);
      res["eq:" + std::to_string(n)] = eq;
      if (eq > tol.consistency_tol * scale) inconsistent = true;
    }
  }
  for (const auto& [n, known_b] : opt.known_fields) {
    auto it = result.params.b.find(n);
    if (it == result.params.b.end()) fail(ErrorKind::Input, "known field for unknown node " + std::to_string(n));
    res["field:" + std::to_string(n)] = std::abs(it->second - known_b);
  }
  result.residuals = res;
  if (inconsistent) result.flags.push_back({"InconsistentData", std::nullopt});
  return result;
}

}  // namespace gateway
