#pragma once

// Dense complex linear algebra and quantum-state utilities.
//
// Conventions shared by every module:
//   * Subsystem order is party-major. Within a party the flag qubit (if any)
//     comes first, then the data register, then junk.
//   * Basis indices are big-endian: subsystem 0 is the most significant digit,
//     so tensor(A, B) puts A's indices major.
//   * Every sampling routine takes an explicit Rng; nothing seeds from the clock.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace conjsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Dims = std::vector<std::size_t>;
using Subsystems = std::vector<std::size_t>;

inline constexpr double kDefaultTol = 1e-10;
inline constexpr double kStateTol = 1e-12;
inline constexpr double kSchmidtCutoff = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when an operation refuses to run because its input does not meet
/// the stated precondition (e.g. a non-Hermitian "Hamiltonian").
class PreconditionError : public Error {
 public:
  using Error::Error;
};

std::size_t total_dim(const Dims& dims);

// ---------------------------------------------------------------------------
// States

class StateVector {
 public:
  /// Throws if the amplitude count does not match the dims or the norm is off
  /// by more than kStateTol.
  StateVector(Dims dims, Vector amplitudes);

  /// Normalizes first; throws only on a zero vector or a length mismatch.
  static StateVector normalized(Dims dims, Vector amplitudes);
  static StateVector basis(Dims dims, std::size_t index);

  const Dims& dims() const { return dims_; }
  const Vector& amplitudes() const { return amplitudes_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  std::size_t num_subsystems() const { return dims_.size(); }

  StateVector conjugate() const;

 private:
  Dims dims_;
  Vector amplitudes_;
};

class DensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and eigenvalues >= -kStateTol.
  DensityMatrix(Dims dims, Matrix matrix);

  static DensityMatrix from_pure(const StateVector& psi);

  const Dims& dims() const { return dims_; }
  const Matrix& matrix() const { return matrix_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t num_subsystems() const { return dims_.size(); }

  double purity() const;

 private:
  Dims dims_;
  Matrix matrix_;
};

// ---------------------------------------------------------------------------
// Matrix predicates and constants

bool is_hermitian(const Matrix& m, double tol = kDefaultTol);
bool is_unitary(const Matrix& m, double tol = kDefaultTol);
bool is_psd(const Matrix& m, double tol = kDefaultTol);
/// Hermitian and unitary, i.e. eigenvalues +-1.
bool is_binary_observable(const Matrix& m, double tol = kDefaultTol);

double frobenius(const Matrix& m);
double max_imag(const Matrix& m);

namespace pauli {
Matrix I();
Matrix X();
Matrix Y();
Matrix Z();
Matrix H();
Matrix S();
Matrix identity(std::size_t dim);
}  // namespace pauli

StateVector phi_plus();

// ---------------------------------------------------------------------------
// Tensor algebra

Matrix tensor(const Matrix& a, const Matrix& b);
Vector tensor(const Vector& a, const Vector& b);
Matrix tensor(const std::vector<Matrix>& factors);
StateVector tensor(const StateVector& a, const StateVector& b);

/// Lifts `op`, which acts on `targets` (in that order), to the full space
/// described by `dims`. Identity on every other subsystem.
Matrix embed(const Matrix& op, const Dims& dims, const Subsystems& targets);

/// Reorders subsystems so that new subsystem k is old subsystem order[k].
StateVector permute_subsystems(const StateVector& psi, const Subsystems& order);
Matrix permute_subsystems(const Matrix& op, const Dims& dims, const Subsystems& order);
Dims permute_dims(const Dims& dims, const Subsystems& order);

// ---------------------------------------------------------------------------
// Measurement statistics

/// tr(rho M). Throws DimensionError on mismatch and Error when the imaginary
/// residue exceeds 1e-10 (a non-Hermitian M).
double expectation(const StateVector& psi, const Matrix& m);
double expectation(const DensityMatrix& rho, const Matrix& m);

/// Keeps the listed subsystems (sorted ascending) and traces out the rest.
DensityMatrix partial_trace(const DensityMatrix& rho, Subsystems keep);
DensityMatrix partial_trace(const StateVector& psi, Subsystems keep);

struct SchmidtDecomposition {
  Eigen::VectorXd coefficients;  // nonincreasing, > cutoff
  Matrix left_basis;             // columns |j>_L on the left group
  Matrix right_basis;            // columns |j>_R on the right group
  Subsystems left;
  Subsystems right;
  Dims dims;                     // dims of the decomposed state

  std::size_t rank() const { return static_cast<std::size_t>(coefficients.size()); }
  /// sum_j lambda_j |j>_L |j>_R, returned in the original subsystem order.
  Vector reconstruct() const;
};

/// `left` lists the subsystems of one side of the cut; the rest form the other
/// side. Schmidt vectors are expressed in ascending subsystem order per side.
SchmidtDecomposition schmidt(const StateVector& psi, Subsystems left,
                             double cutoff = kSchmidtCutoff);

/// Projector onto the span of `side`'s Schmidt vectors with
/// lambda > tol * lambda_max. Acts on `side` in ascending subsystem order.
Matrix support_projector(const StateVector& psi, Subsystems side,
                         double tol = kSchmidtCutoff);

/// exp(-i H t) by Hermitian eigendecomposition.
Matrix herm_expm(const Matrix& h, double t);

// ---------------------------------------------------------------------------
// Randomness

/// Seedable generator. `stream` derives an independent generator for a
/// (root seed, index) pair, so work can be sharded without changing results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng stream(std::uint64_t root, std::uint64_t index);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index);

/// Index of the outcome drawn from `probs` (assumed to sum to 1).
std::size_t sample_index(const double* probs, std::size_t n, double u);

struct MeasurementResult {
  int outcome;  // +1 or -1
  StateVector post_state;
};

struct MixedMeasurementResult {
  int outcome;
  DensityMatrix post_state;
};

/// Probabilities of +1 and -1 for a binary observable.
std::array<double, 2> outcome_probabilities(const StateVector& psi, const Matrix& m);
std::array<double, 2> outcome_probabilities(const DensityMatrix& rho, const Matrix& m);

MeasurementResult measure(const StateVector& psi, const Matrix& m, Rng& rng);
MixedMeasurementResult measure(const DensityMatrix& rho, const Matrix& m, Rng& rng);

// ---------------------------------------------------------------------------
// Pauli decomposition on one qubit

enum class Pauli { I = 0, X = 1, Y = 2, Z = 3 };

struct PauliBlocks {
  std::array<Matrix, 4> blocks;  // indexed by Pauli

  const Matrix& operator[](Pauli p) const { return blocks[static_cast<int>(p)]; }
  /// sum_P P_qubit (x) M_P, back in the original subsystem order.
  Matrix reconstruct(std::size_t qubit, const Dims& dims) const;
};

/// M = sum_P P_qubit (x) M_P with M_P = tr_qubit[(P (x) I) M] / 2. The blocks
/// act on the remaining subsystems in their original order.
PauliBlocks pauli_decompose(const Matrix& m, std::size_t qubit, const Dims& dims);

// ---------------------------------------------------------------------------
// Random test objects (Gaussian entries from Rng)

namespace random {
Matrix ginibre(std::size_t dim, Rng& rng);
Matrix hermitian(std::size_t dim, Rng& rng);
Matrix unitary(std::size_t dim, Rng& rng);
Matrix psd(std::size_t dim, Rng& rng);
Matrix binary_observable(std::size_t dim, Rng& rng);
StateVector state(const Dims& dims, Rng& rng);
}  // namespace random

}  // namespace conjsim
