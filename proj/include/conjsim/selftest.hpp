#pragma once

// Mayers-Yao and extended (complex) self-tests of an EPR source.
//
// An Experiment is bipartite: Alice owns the first block of subsystems, Bob
// the rest. Observables are stored on the owning party's registers only.
// The extended test is three Mayers-Yao tests run together on the setting
// triples (X, Z, D), (X, Y, E) and (Y, Z, F); Bob's Y carries the -1 phase so
// the reference correlations are +1 in every basis.

#include "conjsim/matcore.hpp"
#include "conjsim/simfamily.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace conjsim {

enum class Setting { X, Y, Z, D, E, F };
enum class Party { A, B };
enum class TestKind { MayersYao, Extended };

std::string to_string(Setting s);
std::string to_string(Party p);
std::string to_string(TestKind k);
Setting setting_from_string(std::string_view text);
TestKind kind_from_string(std::string_view text);

struct PartyRegisters {
  Dims dims;
  std::map<Setting, Matrix> observables;
  /// Local index of the register that plays the flag role, when known.
  std::optional<std::size_t> flag;

  std::size_t dim() const { return total_dim(dims); }
};

class Experiment {
 public:
  /// Every observable must be binary and sized to its party's registers; the
  /// state's dims must be alice.dims followed by bob.dims.
  Experiment(StateVector state, PartyRegisters alice, PartyRegisters bob);

  /// Purifies rho into a junk register appended to Alice's registers. Rank-1
  /// inputs are used directly without a junk register.
  static Experiment purified(const DensityMatrix& rho, PartyRegisters alice, PartyRegisters bob);

  const StateVector& state() const { return state_; }
  const PartyRegisters& party(Party p) const { return p == Party::A ? alice_ : bob_; }
  bool has(Party p, Setting s) const;
  const Matrix& observable(Party p, Setting s) const;
  /// Full-space operator of a party-local matrix.
  Matrix embed_local(Party p, const Matrix& local) const;
  Matrix embedded(Party p, Setting s) const { return embed_local(p, observable(p, s)); }
  Subsystems subsystems(Party p) const;

 private:
  StateVector state_;
  PartyRegisters alice_;
  PartyRegisters bob_;
};

/// |phi+> with the stated observables.
Experiment reference_experiment(TestKind kind);

/// Reference observable matrices (Bob's Y is -Y, E_B = (X-Y)/sqrt2, F_B = (Z-Y)/sqrt2).
Matrix reference_observable(Party p, Setting s);

/// Multi-party family member on |phi+>: per party [flag, data], observables
/// lifted with C(.), mixed states purified onto Alice. Flags are declared.
Experiment family_experiment(TestKind kind, const SimParams& p);

Experiment with_observable(const Experiment& exp, Party p, Setting s, const Matrix& m);
Experiment with_state(const Experiment& exp, const StateVector& psi);
/// Conjugates state and observables by U_A (x) U_B.
Experiment rotate_locally(const Experiment& exp, const Matrix& ua, const Matrix& ub);
/// Attaches a two-subsystem junk state: subsystem 0 joins Alice, 1 joins Bob.
Experiment attach_junk(const Experiment& exp, const StateVector& junk);

// ---------------------------------------------------------------------------
// Statistics

struct SubTest {
  Setting first;
  Setting second;
  Setting diagonal;
};

std::vector<SubTest> subtests(TestKind kind);

using MarginalKey = std::pair<Party, Setting>;
using JointKey = std::pair<Setting, Setting>;  // (Alice's setting, Bob's setting)

struct Schedule {
  std::vector<MarginalKey> marginals;
  std::vector<JointKey> joints;
};

/// Union of the sub-tests' pair schedules; `include_cross` adds every pair of
/// settings across sub-tests.
Schedule test_schedule(TestKind kind, bool include_cross = false);

struct CorrelationEntry {
  double value = 0.0;
  std::optional<double> stderr_;
  std::size_t samples = 0;  // 0 for exact entries
};

struct CorrelationTable {
  std::map<MarginalKey, CorrelationEntry> marginals;
  std::map<JointKey, CorrelationEntry> joints;
};

std::string entry_name(const MarginalKey& key);
std::string entry_name(const JointKey& key);

CorrelationTable correlations(const Experiment& exp, const Schedule& schedule);
CorrelationTable correlations(const Experiment& exp, TestKind kind, bool include_cross = false);

/// Every entry is the mean of n_per_pair seeded +-1 rounds drawn from the Born
/// distribution; entry k uses Rng::stream(seed, k), so the worker count does
/// not change the result.
CorrelationTable sampled_correlations(const Experiment& exp, const Schedule& schedule,
                                      std::size_t n_per_pair, std::uint64_t seed,
                                      unsigned workers = 1);

struct Deviation {
  std::string entry;
  double value = 0.0;
  double reference = 0.0;
  double deviation = 0.0;
  double allowed = 0.0;
};

struct StatisticsVerdict {
  bool pass = false;
  std::vector<Deviation> deviations;  // schedule order
  Deviation worst;                    // largest deviation / allowed ratio
};

/// Pass iff every scheduled entry is within tol of the reference value.
/// Throws Error when the table misses a scheduled entry.
StatisticsVerdict check_against_reference(const CorrelationTable& table, TestKind kind, double tol,
                                          bool include_cross = false);

/// Sampled variant: entry tolerance is n_sigma * max(stderr, sqrt((1 - r^2)/n)).
StatisticsVerdict check_sampled_against_reference(const CorrelationTable& table, TestKind kind,
                                                  double n_sigma = 5.0, bool include_cross = false);

// ---------------------------------------------------------------------------
// Algebraic checks on the physical state

struct Residual {
  std::string name;
  double value = 0.0;
};

struct ResidualReport {
  std::vector<Residual> entries;

  double max() const;
  bool pass(double tol) const { return max() <= tol; }
  std::vector<std::string> failing(double tol) const;
};

/// The ten state equalities and the Gram residuals of
/// {psi, P_A psi, Q_A psi, P_A Q_A psi} for the sub-test (P, Q, R).
ResidualReport check_state_equalities(const Experiment& exp, const SubTest& test);
ResidualReport check_state_equalities(const Experiment& exp, TestKind kind);

/// ||R_A psi - (P_A + Q_A)/sqrt2 psi|| and the same on Bob's side.
ResidualReport check_d_collapse(const Experiment& exp, const SubTest& test);
ResidualReport check_d_collapse(const Experiment& exp, TestKind kind);

struct AnticommutatorResidual {
  double raw = 0.0;      // ||{M, N} (x) I psi||
  double support = 0.0;  // ||P {M, N} P||_F, P = support projector of the party
};

AnticommutatorResidual anticommutator_residual(const Experiment& exp, Party p, Setting first,
                                               Setting second);

// ---------------------------------------------------------------------------
// Extraction and equivalence

/// Output of the partial-SWAP circuit. The extracted state lives on
/// [Alice regs, Bob regs, anc_A, anc_B].
struct Extraction {
  StateVector state;
  std::map<MarginalKey, Vector> actions;  // Phi(M' psi) for every observable
  Matrix isometry_a;                      // d_A -> 2 d_A on [regs, anc]
  Matrix isometry_b;
  std::size_t alice_subsystems = 0;
  std::size_t bob_subsystems = 0;

  std::size_t ancilla(Party p) const;
  /// The party's registers followed by its ancilla, as indices into state.
  Subsystems local_subsystems(Party p) const;
  Subsystems register_subsystems(Party p) const;
  const Matrix& isometry(Party p) const { return p == Party::A ? isometry_a : isometry_b; }
};

/// Per party: ancilla |0>, H, controlled-Z', H, controlled-X' (ancilla as control).
/// Refuses (PreconditionError) unless the (X, Z, D) statistics match within tol
/// and X, Z anti-commute on the support of each party.
Extraction extraction_isometry(const Experiment& exp, double tol = 1e-9);

struct YCoefficients {
  double i_norm = 0.0;
  double x_norm = 0.0;
  double y_norm = 0.0;
  double z_norm = 0.0;
  /// ||M_S^2 - P_S||_F + ||M_S - M_S^dag||_F for the Y block M_S.
  double normal_form_residual = 0.0;
  /// <Phi(psi)| M_S |Phi(psi)>: +1 on the reference branch, -1 on the conjugate.
  double sign_expectation = 0.0;
  Matrix m_s;      // on the party's registers
  Matrix p_s;      // support projector on the party's registers
  bool pass = false;
};

/// Decomposes the pushed-forward Y' = Phi Y Phi^dag, restricted to the
/// support, on the extracted qubit. Bob's reference Y is -Y, so his M_S is
/// minus the Y block.
YCoefficients y_coefficient_check(const Experiment& exp, const Extraction& ext, Party p,
                                  double tol = 1e-9);

struct FamilyParams {
  double population_0 = 0.0;
  double population_1 = 0.0;
  double coherence = 0.0;
  double leak = 0.0;
  bool coherence_resolved = false;
};

/// Populations of the M_S eigenspaces on the junk (|alpha|^2, |beta|^2) and the
/// |00><11| coherence of the declared flag registers. Throws Error when the
/// junk leaks outside the correlated {00, 11} sector beyond tol.
FamilyParams estimate_family_params(const Experiment& exp, const Extraction& ext,
                                    double tol = 1e-9);

struct EquivalenceReport {
  TestKind kind = TestKind::MayersYao;
  double tol = 1e-9;
  double state_fidelity = 0.0;
  std::map<MarginalKey, double> action_fidelities;
  std::map<std::string, double> anticommutators;  // support residuals
  std::optional<YCoefficients> y_alice;
  std::optional<YCoefficients> y_bob;
  std::optional<FamilyParams> family;
  bool pass = false;
};

/// Extracts and compares against the reference on the ancillas. Refuses with
/// PreconditionError when extraction does.
EquivalenceReport verify_equivalence(const Experiment& exp, TestKind kind, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Pipeline

struct SampledMode {
  std::size_t n_per_pair = 100000;
  std::uint64_t seed = 0;
  double n_sigma = 5.0;
  unsigned workers = 1;
};

struct SelfTestOptions {
  TestKind kind = TestKind::MayersYao;
  double tol = 1e-9;
  bool include_cross = false;
  std::optional<SampledMode> sampled;
};

struct StageResult {
  std::string name;
  bool pass = false;
  bool ran = true;
  double worst = 0.0;
  std::vector<std::string> failing;
};

struct SelfTestReport {
  SelfTestOptions options;
  CorrelationTable table;
  StatisticsVerdict statistics;
  ResidualReport equalities;
  ResidualReport d_collapse;
  std::map<std::string, AnticommutatorResidual> anticommutators;
  std::optional<EquivalenceReport> equivalence;
  std::vector<StageResult> stages;
  bool pass = false;
  std::string failing_stage;  // first failing stage, empty on pass

  std::vector<std::string> failing_checks() const;
  const StageResult& stage(const std::string& name) const;
};

/// statistics -> state equalities -> D collapse -> anti-commutation ->
/// extraction -> equivalence. The first four always run; extraction is
/// refused when any of them fails.
SelfTestReport run_selftest(const Experiment& exp, const SelfTestOptions& options);

}  // namespace conjsim
