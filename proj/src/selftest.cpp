#include "conjsim/selftest.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <thread>

namespace conjsim {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

Matrix ket0() {
  Matrix k = Matrix::Zero(2, 1);
  k(0, 0) = 1.0;
  return k;
}

Matrix projector(int bit) {
  Matrix p = Matrix::Zero(2, 2);
  p(bit, bit) = 1.0;
  return p;
}

Dims concat(const Dims& a, const Dims& b) {
  Dims out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Subsystems range(std::size_t begin, std::size_t end) {
  Subsystems out;
  for (std::size_t k = begin; k < end; ++k) out.push_back(k);
  return out;
}

void check_party(const PartyRegisters& regs, const char* who) {
  const auto d = static_cast<Eigen::Index>(regs.dim());
  for (const auto& [setting, m] : regs.observables) {
    if (m.rows() != d || m.cols() != d)
      throw DimensionError(std::string("Experiment: observable ") + to_string(setting) + "_" + who +
                           " does not match the party's registers");
    if (!is_binary_observable(m, kDefaultTol))
      throw PreconditionError(std::string("Experiment: observable ") + to_string(setting) + "_" +
                              who + " is not binary");
  }
  if (regs.flag && *regs.flag >= regs.dims.size())
    throw DimensionError(std::string("Experiment: flag register out of range for party ") + who);
}

// Local Born probabilities of (+,+), (+,-), (-,+), (-,-) for M_A (x) M_B.
std::array<double, 4> joint_probabilities(const StateVector& psi, const Matrix& ma,
                                          const Matrix& mb) {
  const auto ia = Matrix::Identity(ma.rows(), ma.cols());
  const auto ib = Matrix::Identity(mb.rows(), mb.cols());
  std::array<double, 4> probs{};
  int k = 0;
  for (int x : {1, -1})
    for (int y : {1, -1}) {
      const Matrix pa = (ia + static_cast<double>(x) * ma) / 2.0;
      const Matrix pb = (ib + static_cast<double>(y) * mb) / 2.0;
      probs[k++] = (tensor(pa, pb) * psi.amplitudes()).squaredNorm();
    }
  return probs;
}

std::vector<Setting> settings_of(TestKind kind) {
  std::set<Setting> all;
  for (const auto& t : subtests(kind)) all.insert({t.first, t.second, t.diagonal});
  return {all.begin(), all.end()};
}

std::string label(Setting s, Party p) { return to_string(s) + "_" + to_string(p); }

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Setting s) {
  switch (s) {
    case Setting::X: return "X";
    case Setting::Y: return "Y";
    case Setting::Z: return "Z";
    case Setting::D: return "D";
    case Setting::E: return "E";
    case Setting::F: return "F";
  }
  return "?";
}

std::string to_string(Party p) { return p == Party::A ? "A" : "B"; }

std::string to_string(TestKind k) { return k == TestKind::MayersYao ? "mayersyao" : "extended"; }

Setting setting_from_string(std::string_view text) {
  for (auto s : {Setting::X, Setting::Y, Setting::Z, Setting::D, Setting::E, Setting::F})
    if (text == to_string(s)) return s;
  throw Error("unknown setting label: " + std::string(text));
}

TestKind kind_from_string(std::string_view text) {
  if (text == "mayersyao" || text == "mayers-yao" || text == "my") return TestKind::MayersYao;
  if (text == "extended" || text == "ext") return TestKind::Extended;
  throw Error("unknown test kind: " + std::string(text));
}

// ---------------------------------------------------------------------------

Experiment::Experiment(StateVector state, PartyRegisters alice, PartyRegisters bob)
    : state_(std::move(state)), alice_(std::move(alice)), bob_(std::move(bob)) {
  if (state_.dims() != concat(alice_.dims, bob_.dims))
    throw DimensionError("Experiment: state dims must be Alice's dims followed by Bob's");
  check_party(alice_, "A");
  check_party(bob_, "B");
}

Experiment Experiment::purified(const DensityMatrix& rho, PartyRegisters alice,
                                PartyRegisters bob) {
  if (rho.dims() != concat(alice.dims, bob.dims))
    throw DimensionError("Experiment: state dims must be Alice's dims followed by Bob's");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(rho.matrix());
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = solver.eigenvalues().size(); k-- > 0;)
    if (solver.eigenvalues()(k) > kStateTol) kept.push_back(k);
  if (kept.size() == 1)
    return Experiment(StateVector::normalized(rho.dims(), solver.eigenvectors().col(kept[0])),
                      std::move(alice), std::move(bob));

  const auto r = kept.size();
  Vector purified = Vector::Zero(static_cast<Eigen::Index>(rho.dim() * r));
  for (std::size_t j = 0; j < r; ++j) {
    Vector junk = Vector::Zero(static_cast<Eigen::Index>(r));
    junk(static_cast<Eigen::Index>(j)) = 1.0;
    const double weight = std::sqrt(solver.eigenvalues()(kept[j]));
    purified += weight * tensor(Vector(solver.eigenvectors().col(kept[j])), junk);
  }
  // [A regs, B regs, J] -> [A regs, J, B regs]
  const auto na = alice.dims.size();
  const auto nb = bob.dims.size();
  Subsystems order = range(0, na);
  order.push_back(na + nb);
  for (std::size_t k = na; k < na + nb; ++k) order.push_back(k);
  Dims dims = concat(rho.dims(), Dims{r});
  const auto psi = permute_subsystems(StateVector::normalized(dims, purified), order);

  for (auto& [setting, m] : alice.observables) m = tensor(m, pauli::identity(r));
  alice.dims.push_back(r);
  return Experiment(psi, std::move(alice), std::move(bob));
}

bool Experiment::has(Party p, Setting s) const { return party(p).observables.count(s) > 0; }

const Matrix& Experiment::observable(Party p, Setting s) const {
  const auto& obs = party(p).observables;
  const auto it = obs.find(s);
  if (it == obs.end()) throw Error("Experiment: missing observable " + label(s, p));
  return it->second;
}

Matrix Experiment::embed_local(Party p, const Matrix& local) const {
  const auto other = static_cast<std::size_t>(party(p == Party::A ? Party::B : Party::A).dim());
  return p == Party::A ? tensor(local, pauli::identity(other)) : tensor(pauli::identity(other), local);
}

Subsystems Experiment::subsystems(Party p) const {
  const auto na = alice_.dims.size();
  return p == Party::A ? range(0, na) : range(na, na + bob_.dims.size());
}

Matrix reference_observable(Party p, Setting s) {
  const Matrix x = pauli::X(), y = pauli::Y(), z = pauli::Z();
  const Matrix yy = p == Party::A ? y : Matrix(-y);
  switch (s) {
    case Setting::X: return x;
    case Setting::Y: return yy;
    case Setting::Z: return z;
    case Setting::D: return (x + z) * kInvSqrt2;
    case Setting::E: return (x + yy) * kInvSqrt2;
    case Setting::F: return (yy + z) * kInvSqrt2;
  }
  throw Error("reference_observable: unknown setting");
}

Experiment reference_experiment(TestKind kind) {
  PartyRegisters alice{{2}, {}, std::nullopt};
  PartyRegisters bob{{2}, {}, std::nullopt};
  for (auto s : settings_of(kind)) {
    alice.observables[s] = reference_observable(Party::A, s);
    bob.observables[s] = reference_observable(Party::B, s);
  }
  return Experiment(phi_plus(), std::move(alice), std::move(bob));
}

Experiment family_experiment(TestKind kind, const SimParams& p) {
  const auto rho = multiparty_sim_state(phi_plus(), 2, p);
  PartyRegisters alice{{2, 2}, {}, 0};
  PartyRegisters bob{{2, 2}, {}, 0};
  for (auto s : settings_of(kind)) {
    alice.observables[s] = lift_local_observable(reference_observable(Party::A, s));
    bob.observables[s] = lift_local_observable(reference_observable(Party::B, s));
  }
  return Experiment::purified(rho, std::move(alice), std::move(bob));
}

Experiment with_observable(const Experiment& exp, Party p, Setting s, const Matrix& m) {
  PartyRegisters alice = exp.party(Party::A), bob = exp.party(Party::B);
  (p == Party::A ? alice : bob).observables[s] = m;
  return Experiment(exp.state(), std::move(alice), std::move(bob));
}

Experiment with_state(const Experiment& exp, const StateVector& psi) {
  return Experiment(psi, exp.party(Party::A), exp.party(Party::B));
}

Experiment rotate_locally(const Experiment& exp, const Matrix& ua, const Matrix& ub) {
  if (!is_unitary(ua) || !is_unitary(ub)) throw PreconditionError("rotate_locally: not unitary");
  PartyRegisters alice = exp.party(Party::A), bob = exp.party(Party::B);
  for (auto& [s, m] : alice.observables) m = ua * m * ua.adjoint();
  for (auto& [s, m] : bob.observables) m = ub * m * ub.adjoint();
  const auto psi =
      StateVector::normalized(exp.state().dims(), tensor(ua, ub) * exp.state().amplitudes());
  return Experiment(psi, std::move(alice), std::move(bob));
}

Experiment attach_junk(const Experiment& exp, const StateVector& junk) {
  if (junk.num_subsystems() != 2) throw DimensionError("attach_junk: junk must have two subsystems");
  PartyRegisters alice = exp.party(Party::A), bob = exp.party(Party::B);
  const auto ja = junk.dims()[0], jb = junk.dims()[1];
  const auto na = alice.dims.size(), nb = bob.dims.size();
  // [A, B, JA, JB] -> [A, JA, B, JB]
  Subsystems order = range(0, na);
  order.push_back(na + nb);
  for (std::size_t k = na; k < na + nb; ++k) order.push_back(k);
  order.push_back(na + nb + 1);
  const auto psi = permute_subsystems(tensor(exp.state(), junk), order);
  for (auto& [s, m] : alice.observables) m = tensor(m, pauli::identity(ja));
  for (auto& [s, m] : bob.observables) m = tensor(m, pauli::identity(jb));
  alice.dims.push_back(ja);
  bob.dims.push_back(jb);
  return Experiment(psi, std::move(alice), std::move(bob));
}

// ---------------------------------------------------------------------------

std::vector<SubTest> subtests(TestKind kind) {
  std::vector<SubTest> out{{Setting::X, Setting::Z, Setting::D}};
  if (kind == TestKind::Extended) {
    out.push_back({Setting::X, Setting::Y, Setting::E});
    out.push_back({Setting::Y, Setting::Z, Setting::F});
  }
  return out;
}

Schedule test_schedule(TestKind kind, bool include_cross) {
  std::set<JointKey> joints;
  if (include_cross) {
    for (auto s : settings_of(kind))
      for (auto t : settings_of(kind)) joints.insert({s, t});
  } else {
    for (const auto& test : subtests(kind)) {
      const Setting triple[] = {test.first, test.second, test.diagonal};
      for (auto s : triple)
        for (auto t : triple) joints.insert({s, t});
    }
  }
  Schedule out;
  for (auto p : {Party::A, Party::B})
    for (auto s : settings_of(kind)) out.marginals.push_back({p, s});
  out.joints.assign(joints.begin(), joints.end());
  return out;
}

std::string entry_name(const MarginalKey& key) {
  return "marginal(" + label(key.second, key.first) + ")";
}

std::string entry_name(const JointKey& key) {
  return "joint(" + label(key.first, Party::A) + "," + label(key.second, Party::B) + ")";
}

CorrelationTable correlations(const Experiment& exp, const Schedule& schedule) {
  CorrelationTable table;
  const auto ia = pauli::identity(exp.party(Party::A).dim());
  const auto ib = pauli::identity(exp.party(Party::B).dim());
  for (const auto& key : schedule.marginals) {
    const auto& m = exp.observable(key.first, key.second);
    const Matrix full = key.first == Party::A ? tensor(m, ib) : tensor(ia, m);
    table.marginals[key] = {expectation(exp.state(), full), std::nullopt, 0};
  }
  for (const auto& key : schedule.joints) {
    const Matrix full =
        tensor(exp.observable(Party::A, key.first), exp.observable(Party::B, key.second));
    table.joints[key] = {expectation(exp.state(), full), std::nullopt, 0};
  }
  return table;
}

CorrelationTable correlations(const Experiment& exp, TestKind kind, bool include_cross) {
  return correlations(exp, test_schedule(kind, include_cross));
}

CorrelationTable sampled_correlations(const Experiment& exp, const Schedule& schedule,
                                      std::size_t n_per_pair, std::uint64_t seed,
                                      unsigned workers) {
  if (n_per_pair == 0) throw PreconditionError("sampled_correlations: n_per_pair must be >= 1");
  // Product of outcomes for probs index 0..3 is +1, -1, -1, +1.
  struct Job {
    std::array<double, 4> probs;
    CorrelationEntry result;
  };
  std::vector<Job> jobs;
  const auto ia = pauli::identity(exp.party(Party::A).dim());
  const auto ib = pauli::identity(exp.party(Party::B).dim());
  for (const auto& key : schedule.marginals) {
    const auto& m = exp.observable(key.first, key.second);
    jobs.push_back({key.first == Party::A ? joint_probabilities(exp.state(), m, ib)
                                          : joint_probabilities(exp.state(), ia, m),
                    {}});
  }
  for (const auto& key : schedule.joints)
    jobs.push_back({joint_probabilities(exp.state(), exp.observable(Party::A, key.first),
                                        exp.observable(Party::B, key.second)),
                    {}});

  auto run = [&](std::size_t k) {
    Rng rng = Rng::stream(seed, k);
    long long sum = 0;
    for (std::size_t r = 0; r < n_per_pair; ++r) {
      const auto idx = sample_index(jobs[k].probs.data(), 4, rng.uniform());
      sum += (idx == 0 || idx == 3) ? 1 : -1;
    }
    const double mean = static_cast<double>(sum) / static_cast<double>(n_per_pair);
    const double se = std::sqrt(std::max(0.0, 1.0 - mean * mean) / static_cast<double>(n_per_pair));
    jobs[k].result = {mean, se, n_per_pair};
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    for (std::size_t k = 0; k < jobs.size(); ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < jobs.size(); k += workers) run(k);
      });
    for (auto& t : pool) t.join();
  }

  CorrelationTable table;
  std::size_t k = 0;
  for (const auto& key : schedule.marginals) table.marginals[key] = jobs[k++].result;
  for (const auto& key : schedule.joints) table.joints[key] = jobs[k++].result;
  return table;
}

namespace {

template <typename AllowedFn>
StatisticsVerdict compare(const CorrelationTable& table, TestKind kind, bool include_cross,
                          AllowedFn allowed_for) {
  const auto schedule = test_schedule(kind, include_cross);
  const auto reference = correlations(reference_experiment(kind), schedule);
  StatisticsVerdict verdict;
  verdict.pass = true;
  double worst_ratio = -1.0;
  auto visit = [&](const std::string& name, const CorrelationEntry& got, double ref) {
    Deviation d{name, got.value, ref, std::abs(got.value - ref), allowed_for(got, ref)};
    if (d.deviation > d.allowed) verdict.pass = false;
    const double ratio = d.deviation / std::max(d.allowed, 1e-300);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      verdict.worst = d;
    }
    verdict.deviations.push_back(d);
  };
  for (const auto& key : schedule.marginals) {
    const auto it = table.marginals.find(key);
    if (it == table.marginals.end()) throw Error("correlation table misses " + entry_name(key));
    visit(entry_name(key), it->second, reference.marginals.at(key).value);
  }
  for (const auto& key : schedule.joints) {
    const auto it = table.joints.find(key);
    if (it == table.joints.end()) throw Error("correlation table misses " + entry_name(key));
    visit(entry_name(key), it->second, reference.joints.at(key).value);
  }
  return verdict;
}

}  // namespace

StatisticsVerdict check_against_reference(const CorrelationTable& table, TestKind kind, double tol,
                                          bool include_cross) {
  return compare(table, kind, include_cross,
                 [tol](const CorrelationEntry&, double) { return tol; });
}

StatisticsVerdict check_sampled_against_reference(const CorrelationTable& table, TestKind kind,
                                                  double n_sigma, bool include_cross) {
  return compare(table, kind, include_cross, [n_sigma](const CorrelationEntry& e, double ref) {
    const double n = static_cast<double>(std::max<std::size_t>(e.samples, 1));
    const double ref_sigma = std::sqrt(std::max(0.0, 1.0 - ref * ref) / n);
    return n_sigma * std::max(e.stderr_.value_or(0.0), ref_sigma) + 1e-12;
  });
}

// ---------------------------------------------------------------------------

double ResidualReport::max() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.value);
  return m;
}

std::vector<std::string> ResidualReport::failing(double tol) const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.value > tol) out.push_back(e.name);
  return out;
}

ResidualReport check_state_equalities(const Experiment& exp, const SubTest& test) {
  const Vector& psi = exp.state().amplitudes();
  const Matrix pa = exp.embedded(Party::A, test.first), pb = exp.embedded(Party::B, test.first);
  const Matrix qa = exp.embedded(Party::A, test.second), qb = exp.embedded(Party::B, test.second);
  const Matrix ra = exp.embedded(Party::A, test.diagonal),
               rb = exp.embedded(Party::B, test.diagonal);
  const auto P = to_string(test.first), Q = to_string(test.second), R = to_string(test.diagonal);

  ResidualReport out;
  auto add = [&](std::string name, const Vector& lhs, const Vector& rhs) {
    out.entries.push_back({std::move(name), (lhs - rhs).norm()});
  };
  add(P + "_A " + P + "_B psi = psi", pa * pb * psi, psi);
  add(Q + "_A " + Q + "_B psi = psi", qa * qb * psi, psi);
  add(R + "_A " + R + "_B psi = psi", ra * rb * psi, psi);
  add(P + "_A psi = " + P + "_B psi", pa * psi, pb * psi);
  add(Q + "_A psi = " + Q + "_B psi", qa * psi, qb * psi);
  add(R + "_A psi = " + R + "_B psi", ra * psi, rb * psi);
  add(P + "_A" + Q + "_A psi = " + Q + "_B" + P + "_B psi", pa * qa * psi, qb * pb * psi);
  add(Q + "_A" + P + "_A psi = " + P + "_B" + Q + "_B psi", qa * pa * psi, pb * qb * psi);
  add(P + "_A" + Q + "_A psi = " + P + "_A " + Q + "_B psi", pa * qa * psi, pa * qb * psi);
  add(Q + "_A" + P + "_A psi = " + Q + "_A " + P + "_B psi", qa * pa * psi, qa * pb * psi);

  const std::vector<std::pair<std::string, Vector>> basis{
      {"psi", psi}, {P + "_A psi", pa * psi}, {Q + "_A psi", qa * psi},
      {P + "_A" + Q + "_A psi", pa * qa * psi}};
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i + 1; j < basis.size(); ++j)
      out.entries.push_back({"<" + basis[i].first + "|" + basis[j].first + ">",
                             std::abs(basis[i].second.dot(basis[j].second))});
  return out;
}

ResidualReport check_state_equalities(const Experiment& exp, TestKind kind) {
  ResidualReport out;
  for (const auto& test : subtests(kind)) {
    const auto part = check_state_equalities(exp, test);
    out.entries.insert(out.entries.end(), part.entries.begin(), part.entries.end());
  }
  return out;
}

ResidualReport check_d_collapse(const Experiment& exp, const SubTest& test) {
  const Vector& psi = exp.state().amplitudes();
  ResidualReport out;
  for (auto p : {Party::A, Party::B}) {
    const Matrix r = exp.embedded(p, test.diagonal);
    const Matrix sum = (exp.embedded(p, test.first) + exp.embedded(p, test.second)) * kInvSqrt2;
    out.entries.push_back({label(test.diagonal, p) + " psi = (" + label(test.first, p) + "+" +
                               label(test.second, p) + ")/sqrt2 psi",
                           (r * psi - sum * psi).norm()});
  }
  return out;
}

ResidualReport check_d_collapse(const Experiment& exp, TestKind kind) {
  ResidualReport out;
  for (const auto& test : subtests(kind)) {
    const auto part = check_d_collapse(exp, test);
    out.entries.insert(out.entries.end(), part.entries.begin(), part.entries.end());
  }
  return out;
}

AnticommutatorResidual anticommutator_residual(const Experiment& exp, Party p, Setting first,
                                               Setting second) {
  if (!exp.has(p, first) || !exp.has(p, second))
    throw PreconditionError("anticommutator_residual: invalid pair for party " + to_string(p));
  const Matrix& m = exp.observable(p, first);
  const Matrix& n = exp.observable(p, second);
  const Matrix anti = m * n + n * m;
  const Matrix proj = support_projector(exp.state(), exp.subsystems(p));
  return {(exp.embed_local(p, anti) * exp.state().amplitudes()).norm(),
          frobenius(proj * anti * proj)};
}

// ---------------------------------------------------------------------------

std::size_t Extraction::ancilla(Party p) const {
  return alice_subsystems + bob_subsystems + (p == Party::A ? 0 : 1);
}

Subsystems Extraction::register_subsystems(Party p) const {
  return p == Party::A ? range(0, alice_subsystems)
                       : range(alice_subsystems, alice_subsystems + bob_subsystems);
}

Subsystems Extraction::local_subsystems(Party p) const {
  auto out = register_subsystems(p);
  out.push_back(ancilla(p));
  return out;
}

namespace {

Matrix local_isometry(const Matrix& x, const Matrix& z) {
  const auto d = static_cast<std::size_t>(x.rows());
  const Matrix id = pauli::identity(d);
  const Matrix h_anc = tensor(id, pauli::H());
  const Matrix cz = tensor(id, projector(0)) + tensor(z, projector(1));
  const Matrix cx = tensor(id, projector(0)) + tensor(x, projector(1));
  return cx * h_anc * cz * h_anc * tensor(id, ket0());
}

}  // namespace

Extraction extraction_isometry(const Experiment& exp, double tol) {
  for (auto p : {Party::A, Party::B})
    for (auto s : {Setting::X, Setting::Z, Setting::D})
      if (!exp.has(p, s))
        throw PreconditionError("extraction refused: missing observable " + label(s, p));
  const auto stats = check_against_reference(correlations(exp, TestKind::MayersYao),
                                             TestKind::MayersYao, tol);
  if (!stats.pass)
    throw PreconditionError("extraction refused: statistics fail at " + stats.worst.entry);
  for (auto p : {Party::A, Party::B}) {
    const auto anti = anticommutator_residual(exp, p, Setting::X, Setting::Z);
    if (anti.support > tol)
      throw PreconditionError("extraction refused: X_" + to_string(p) + ", Z_" + to_string(p) +
                              " do not anti-commute on the support");
  }

  Extraction ext{exp.state(), {}, {}, {}, 0, 0};
  ext.isometry_a = local_isometry(exp.observable(Party::A, Setting::X),
                                  exp.observable(Party::A, Setting::Z));
  ext.isometry_b = local_isometry(exp.observable(Party::B, Setting::X),
                                  exp.observable(Party::B, Setting::Z));
  const auto na = exp.party(Party::A).dims.size();
  const auto nb = exp.party(Party::B).dims.size();
  ext.alice_subsystems = na;
  ext.bob_subsystems = nb;

  // Phi_A (x) Phi_B outputs [A regs, anc_A, B regs, anc_B].
  Dims out_dims = exp.party(Party::A).dims;
  out_dims.push_back(2);
  out_dims.insert(out_dims.end(), exp.party(Party::B).dims.begin(), exp.party(Party::B).dims.end());
  out_dims.push_back(2);
  Subsystems order = range(0, na);
  for (std::size_t k = na + 1; k < na + 1 + nb; ++k) order.push_back(k);
  order.push_back(na);
  order.push_back(na + nb + 1);

  const Matrix phi = tensor(ext.isometry_a, ext.isometry_b);
  auto push = [&](const Vector& v) {
    return permute_subsystems(StateVector::normalized(out_dims, phi * v), order);
  };
  ext.state = push(exp.state().amplitudes());
  for (auto p : {Party::A, Party::B})
    for (const auto& [s, m] : exp.party(p).observables)
      ext.actions[{p, s}] = push(exp.embedded(p, s) * exp.state().amplitudes()).amplitudes();
  return ext;
}

YCoefficients y_coefficient_check(const Experiment& exp, const Extraction& ext, Party p,
                                  double tol) {
  if (!exp.has(p, Setting::Y))
    throw PreconditionError("y_coefficient_check: party " + to_string(p) + " has no Y setting");
  const Matrix& iso = ext.isometry(p);
  const Matrix pushed = iso * exp.observable(p, Setting::Y) * iso.adjoint();
  const Matrix proj = support_projector(ext.state, ext.local_subsystems(p));
  const Matrix restricted = proj * pushed * proj;

  Dims local_dims = exp.party(p).dims;
  local_dims.push_back(2);
  const auto qubit = local_dims.size() - 1;
  const auto blocks = pauli_decompose(restricted, qubit, local_dims);
  if (frobenius(blocks.reconstruct(qubit, local_dims) - restricted) > kDefaultTol)
    throw Error("y_coefficient_check: decomposition does not reconstruct");

  YCoefficients out;
  out.i_norm = frobenius(blocks[Pauli::I]);
  out.x_norm = frobenius(blocks[Pauli::X]);
  out.y_norm = frobenius(blocks[Pauli::Y]);
  out.z_norm = frobenius(blocks[Pauli::Z]);
  const double sign = p == Party::A ? 1.0 : -1.0;
  out.m_s = sign * blocks[Pauli::Y];
  out.p_s = pauli_decompose(proj, qubit, local_dims)[Pauli::I];
  out.normal_form_residual =
      frobenius(out.m_s * out.m_s - out.p_s) + frobenius(out.m_s - out.m_s.adjoint());
  out.sign_expectation =
      expectation(ext.state, embed(out.m_s, ext.state.dims(), ext.register_subsystems(p)));
  out.pass = out.i_norm <= tol && out.x_norm <= tol && out.z_norm <= tol &&
             out.normal_form_residual <= tol;
  return out;
}

FamilyParams estimate_family_params(const Experiment& exp, const Extraction& ext, double tol) {
  const auto ya = y_coefficient_check(exp, ext, Party::A, tol);
  const auto yb = y_coefficient_check(exp, ext, Party::B, tol);
  const auto& dims = ext.state.dims();
  auto branch = [&](const YCoefficients& y, Party p, int sign) {
    return embed((y.p_s + static_cast<double>(sign) * y.m_s) / 2.0, dims, ext.register_subsystems(p));
  };
  const Vector& psi = ext.state.amplitudes();
  double pops[2][2];
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      pops[x][y] = (branch(yb, Party::B, y == 0 ? 1 : -1) *
                    (branch(ya, Party::A, x == 0 ? 1 : -1) * psi))
                       .squaredNorm();

  FamilyParams out;
  out.population_0 = pops[0][0];
  out.population_1 = pops[1][1];
  out.leak = pops[0][1] + pops[1][0];
  if (out.leak > tol)
    throw Error("estimate_family_params: junk leaks outside the {00, 11} sector");

  const auto& fa = exp.party(Party::A).flag;
  const auto& fb = exp.party(Party::B).flag;
  if (fa && fb) {
    const auto flags = partial_trace(ext.state, {*fa, ext.alice_subsystems + *fb});
    if (flags.dims() == Dims{2, 2}) {
      out.coherence = std::abs(flags.matrix()(0, 3));
      out.coherence_resolved = true;
    }
  }
  return out;
}

EquivalenceReport verify_equivalence(const Experiment& exp, TestKind kind, double tol) {
  const auto ext = extraction_isometry(exp, tol);
  const auto& dims = ext.state.dims();
  const Vector& psi = ext.state.amplitudes();

  EquivalenceReport report;
  report.kind = kind;
  report.tol = tol;
  const auto anc = partial_trace(ext.state, {ext.ancilla(Party::A), ext.ancilla(Party::B)});
  report.state_fidelity = expectation(anc, phi_plus().amplitudes() * phi_plus().amplitudes().adjoint());

  for (auto p : {Party::A, Party::B})
    for (auto s : {Setting::X, Setting::Z, Setting::D}) {
      const Matrix target = embed(reference_observable(p, s), dims, {ext.ancilla(p)});
      report.action_fidelities[{p, s}] = std::abs(ext.actions.at({p, s}).dot(target * psi));
    }

  for (const auto& test : subtests(kind))
    for (auto p : {Party::A, Party::B}) {
      const auto name = to_string(p) + "(" + to_string(test.first) + "," + to_string(test.second) + ")";
      report.anticommutators[name] = anticommutator_residual(exp, p, test.first, test.second).support;
    }

  bool pass = report.state_fidelity >= 1.0 - tol;
  for (const auto& [key, f] : report.action_fidelities) pass = pass && f >= 1.0 - tol;
  for (const auto& [key, r] : report.anticommutators) pass = pass && r <= tol;

  if (kind == TestKind::Extended) {
    report.y_alice = y_coefficient_check(exp, ext, Party::A, tol);
    report.y_bob = y_coefficient_check(exp, ext, Party::B, tol);
    for (auto p : {Party::A, Party::B}) {
      const auto& y = p == Party::A ? *report.y_alice : *report.y_bob;
      const Matrix normal = tensor(y.m_s, reference_observable(p, Setting::Y));
      const Matrix target = embed(normal, dims, ext.local_subsystems(p));
      report.action_fidelities[{p, Setting::Y}] =
          std::abs(ext.actions.at({p, Setting::Y}).dot(target * psi));
      pass = pass && y.pass && report.action_fidelities[{p, Setting::Y}] >= 1.0 - tol;
    }
    if (pass) {
      try {
        report.family = estimate_family_params(exp, ext, tol);
      } catch (const Error&) {
        pass = false;
      }
    }
  }
  report.pass = pass;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

StageResult named_stage(std::string name) {
  StageResult s;
  s.name = std::move(name);
  return s;
}

}  // namespace

std::vector<std::string> SelfTestReport::failing_checks() const {
  std::vector<std::string> out;
  for (const auto& s : stages)
    for (const auto& f : s.failing) out.push_back(s.name + ": " + f);
  return out;
}

const StageResult& SelfTestReport::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return s;
  throw Error("SelfTestReport: no stage named " + name);
}

SelfTestReport run_selftest(const Experiment& exp, const SelfTestOptions& options) {
  SelfTestReport report;
  report.options = options;
  const auto kind = options.kind;
  const double tol = options.tol;
  const auto schedule = test_schedule(kind, options.include_cross);

  {
    StageResult stage = named_stage("statistics");
    if (options.sampled) {
      const auto& s = *options.sampled;
      report.table = sampled_correlations(exp, schedule, s.n_per_pair, s.seed, s.workers);
      report.statistics =
          check_sampled_against_reference(report.table, kind, s.n_sigma, options.include_cross);
    } else {
      report.table = correlations(exp, schedule);
      report.statistics = check_against_reference(report.table, kind, tol, options.include_cross);
    }
    stage.pass = report.statistics.pass;
    stage.worst = report.statistics.worst.deviation;
    for (const auto& d : report.statistics.deviations)
      if (d.deviation > d.allowed) stage.failing.push_back(d.entry);
    report.stages.push_back(stage);
  }
  {
    report.equalities = check_state_equalities(exp, kind);
    report.stages.push_back({"state_equalities", report.equalities.pass(tol), true,
                             report.equalities.max(), report.equalities.failing(tol)});
  }
  {
    report.d_collapse = check_d_collapse(exp, kind);
    report.stages.push_back({"d_collapse", report.d_collapse.pass(tol), true,
                             report.d_collapse.max(), report.d_collapse.failing(tol)});
  }
  {
    StageResult stage = named_stage("anticommutation");
    stage.pass = true;
    for (const auto& test : subtests(kind))
      for (auto p : {Party::A, Party::B}) {
        const auto name =
            to_string(p) + "(" + to_string(test.first) + "," + to_string(test.second) + ")";
        const auto r = anticommutator_residual(exp, p, test.first, test.second);
        report.anticommutators[name] = r;
        stage.worst = std::max(stage.worst, r.support);
        if (r.support > tol) {
          stage.pass = false;
          stage.failing.push_back(name);
        }
      }
    report.stages.push_back(stage);
  }

  const bool gated = std::all_of(report.stages.begin(), report.stages.end(),
                                 [](const StageResult& s) { return s.pass; });
  StageResult extraction = named_stage("extraction");
  StageResult equivalence = named_stage("equivalence");
  if (!gated) {
    extraction.ran = equivalence.ran = false;
    extraction.failing.push_back("refused: an earlier stage failed");
  } else {
    try {
      report.equivalence = verify_equivalence(exp, kind, tol);
      extraction.pass = true;
      const auto& eq = *report.equivalence;
      equivalence.pass = eq.pass;
      equivalence.worst = 1.0 - eq.state_fidelity;
      if (eq.state_fidelity < 1.0 - tol) equivalence.failing.push_back("state_fidelity");
      for (const auto& [key, f] : eq.action_fidelities) {
        equivalence.worst = std::max(equivalence.worst, 1.0 - f);
        if (f < 1.0 - tol) equivalence.failing.push_back("action(" + label(key.second, key.first) + ")");
      }
      if (eq.y_alice && !eq.y_alice->pass) equivalence.failing.push_back("y_normal_form(A)");
      if (eq.y_bob && !eq.y_bob->pass) equivalence.failing.push_back("y_normal_form(B)");
      if (eq.pass == false && equivalence.failing.empty())
        equivalence.failing.push_back("family_support");
    } catch (const PreconditionError& e) {
      extraction.failing.push_back(e.what());
      equivalence.ran = false;
    }
  }
  report.stages.push_back(extraction);
  report.stages.push_back(equivalence);

  report.pass = true;
  for (const auto& s : report.stages)
    if (!s.pass) {
      report.pass = false;
      report.failing_stage = s.name;
      break;
    }
  return report;
}

}  // namespace conjsim
