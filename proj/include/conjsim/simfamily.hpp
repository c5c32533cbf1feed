#pragma once

// The conjugation-based simulation family: a flag qubit selects between the
// reference experiment (|0>) and its entrywise complex conjugate (|1>).

#include "conjsim/matcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace conjsim {

/// Mixing parameters of a family member: flag populations a, 1-a and the
/// |0><1| coherence c. Feasible iff 0 <= a <= 1 and |c| <= sqrt(a(1-a)).
struct SimParams {
  double a = 1.0;
  cplx c = 0.0;

  static SimParams from_polar(double a, double c_abs, double c_phase);

  bool feasible(double tol = kStateTol) const;
  /// Throws PreconditionError when infeasible.
  void validate() const;
};

class Povm {
 public:
  /// Each element PSD and the elements sum to I, both within 1e-10.
  explicit Povm(std::vector<Matrix> elements);

  const std::vector<Matrix>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(elements_.front().rows()); }

 private:
  std::vector<Matrix> elements_;
};

class KrausMap {
 public:
  /// Requires sum K^dag K = I within 1e-10.
  explicit KrausMap(std::vector<Matrix> operators);

  const std::vector<Matrix>& operators() const { return operators_; }
  std::size_t dim() const { return static_cast<std::size_t>(operators_.front().cols()); }

  Matrix apply(const Matrix& rho) const;
  DensityMatrix apply(const DensityMatrix& rho) const;
  /// ||sum K^dag K - I||_F
  double trace_preservation_residual() const;

 private:
  std::vector<Matrix> operators_;
};

/// Outcome probabilities tr(rho P_k).
std::vector<double> probabilities(const DensityMatrix& rho, const Povm& povm);

/// a|0><0| (x) |psi><psi| + (1-a)|1><1| (x) |psi*><psi*|
///   + c|0><1| (x) |psi><psi*| + c*|1><0| (x) |psi*><psi|, flag prepended.
DensityMatrix sim_state(const StateVector& psi, const SimParams& p);

/// {|0><0| (x) P_k + |1><1| (x) P_k*}
Povm sim_povm(const Povm& povm);

/// C(M) = |0><0| (x) M + |1><1| (x) M*
Matrix c_of(const Matrix& m);

// ---------------------------------------------------------------------------
// Property suite for C(.)

struct CPropertyItem {
  std::string name;
  double max_residual = 0.0;
  std::size_t checks = 0;
  bool passed = true;
};

struct CPropertyConfig {
  std::size_t trials = 100;
  std::size_t dim = 4;
  std::uint64_t seed = 1;
  double tol = kDefaultTol;
  // Optional injected inputs. Each is treated as a sample of the class named
  // by its item (e.g. unitary_fixture feeds the unitarity check) so a wrong
  // fixture shows up as a failing item.
  std::optional<Matrix> hermitian_fixture;
  std::optional<Matrix> unitary_fixture;
  std::optional<Matrix> psd_fixture;
};

struct CPropertyReport {
  std::vector<CPropertyItem> items;
  CPropertyConfig config;

  bool passed() const;
  const CPropertyItem& item(const std::string& name) const;
};

inline constexpr std::size_t kMaxPropertyDim = 8;

/// Checks the eight C(.) lemma items on random inputs. Failures become report
/// entries; throws only on an unsupported dim (> kMaxPropertyDim or 0).
CPropertyReport c_property_suite(const CPropertyConfig& config);

// ---------------------------------------------------------------------------
// Evolution

/// C(U) rho C(U)^dag.
DensityMatrix sim_unitary_evolve(const DensityMatrix& rho_sim, const Matrix& u);

/// Applies C(.) to every Kraus operator.
KrausMap sim_kraus(const KrausMap& map);

/// |0><0| (x) H - |1><1| (x) H*, so that exp(-iH't) = C(exp(-iHt)).
Matrix sim_hamiltonian(const Matrix& h);

/// ||exp(-i H' t) - C(exp(-i H t))||_F for H' = sim_hamiltonian(H).
double hamiltonian_identity_residual(const Matrix& h, double t);

/// Flag-branch blocks of a flag-prepended operator: (<0|.|0>, <1|.|1>).
std::pair<Matrix, Matrix> flag_branches(const Matrix& op);

// ---------------------------------------------------------------------------
// Multi-party family

/// Subsystem layout [flag_1, data_1, flag_2, data_2, ...] for the data dims.
Dims multiparty_dims(const Dims& data_dims);

/// Family state with logical flags |0..0>, |1..1>, one flag qubit per party.
/// psi must have exactly n_parties subsystems.
DensityMatrix multiparty_sim_state(const StateVector& psi, std::size_t n_parties,
                                   const SimParams& p);

/// Local lift |0><0|_flag (x) M + |1><1|_flag (x) M* of a binary observable,
/// acting on that party's (flag, data).
Matrix lift_local_observable(const Matrix& m);

/// The lifted observable of `party` embedded in the full multi-party space.
Matrix multiparty_sim_observable(const Matrix& m, std::size_t party, const Dims& data_dims);

// ---------------------------------------------------------------------------
// Real simulation

/// Hadamard followed by diag(1, -i), normalized: (1/sqrt2)[[1, 1], [-i, i]].
Matrix real_sim_basis_change();

/// Basis change of the flag qubit for a pure |c| = 1/2 family state, giving
/// |0>Re(psi) + |1>Im(psi). The global phase is first fixed so the two flag
/// branches are exact complex conjugates.
StateVector real_simulation_state(const DensityMatrix& rho_sim);
StateVector real_simulation_state(const StateVector& psi_sim);

/// (U (x) I) C(M) (U^dag (x) I) = I (x) Re(M) + XZ (x) Im(M) for a C-lifted M.
Matrix real_simulation_operator(const Matrix& lifted);

}  // namespace conjsim
