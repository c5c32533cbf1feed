#include "conjsim/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace conjsim {

namespace {

Dims strides_of(const Dims& dims) {
  Dims strides(dims.size(), 1);
  for (std::size_t k = dims.size(); k-- > 1;) strides[k - 1] = strides[k] * dims[k];
  return strides;
}

void check_subsystems(const Subsystems& subs, std::size_t n, const char* what) {
  std::vector<bool> seen(n, false);
  for (auto s : subs) {
    if (s >= n) {
      std::ostringstream msg;
      msg << what << ": subsystem index " << s << " out of range (" << n << " subsystems)";
      throw DimensionError(msg.str());
    }
    if (seen[s]) throw DimensionError(std::string(what) + ": repeated subsystem index");
    seen[s] = true;
  }
}

Subsystems complement(const Subsystems& subs, std::size_t n) {
  std::vector<bool> in(n, false);
  for (auto s : subs) in[s] = true;
  Subsystems rest;
  for (std::size_t k = 0; k < n; ++k)
    if (!in[k]) rest.push_back(k);
  return rest;
}

// For every full index: its index within `group` (big-endian over group order)
// and its index within the complement.
void split_indices(const Dims& dims, const Subsystems& group, std::vector<std::size_t>& in_group,
                   std::vector<std::size_t>& in_rest) {
  const auto D = total_dim(dims);
  const auto strides = strides_of(dims);
  const auto rest = complement(group, dims.size());
  in_group.assign(D, 0);
  in_rest.assign(D, 0);
  for (std::size_t idx = 0; idx < D; ++idx) {
    std::size_t g = 0;
    for (auto s : group) g = g * dims[s] + (idx / strides[s]) % dims[s];
    std::size_t r = 0;
    for (auto s : rest) r = r * dims[s] + (idx / strides[s]) % dims[s];
    in_group[idx] = g;
    in_rest[idx] = r;
  }
}

// map[old_index] = new_index when new subsystem k is old subsystem order[k].
std::vector<std::size_t> permutation_map(const Dims& dims, const Subsystems& order) {
  if (order.size() != dims.size()) throw DimensionError("permutation: order length mismatch");
  check_subsystems(order, dims.size(), "permutation");
  std::vector<std::size_t> map;
  std::vector<std::size_t> unused;
  split_indices(dims, order, map, unused);
  return map;
}

Subsystems inverse_order(const Subsystems& order) {
  Subsystems inv(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) inv[order[k]] = k;
  return inv;
}

Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  const Matrix sym = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

std::size_t total_dim(const Dims& dims) {
  std::size_t d = 1;
  for (auto k : dims) {
    if (k == 0) throw DimensionError("subsystem dimension must be positive");
    d *= k;
  }
  return d;
}

// ---------------------------------------------------------------------------

StateVector::StateVector(Dims dims, Vector amplitudes)
    : dims_(std::move(dims)), amplitudes_(std::move(amplitudes)) {
  if (total_dim(dims_) != static_cast<std::size_t>(amplitudes_.size()))
    throw DimensionError("StateVector: amplitude count does not match dims");
  if (std::abs(amplitudes_.norm() - 1.0) > kStateTol)
    throw Error("StateVector: amplitudes are not normalized");
}

StateVector StateVector::normalized(Dims dims, Vector amplitudes) {
  const double n = amplitudes.norm();
  if (n == 0.0) throw Error("StateVector: zero vector");
  return StateVector(std::move(dims), amplitudes / n);
}

StateVector StateVector::basis(Dims dims, std::size_t index) {
  const auto D = total_dim(dims);
  if (index >= D) throw DimensionError("StateVector::basis: index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(D));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(dims), std::move(v));
}

StateVector StateVector::conjugate() const { return StateVector(dims_, amplitudes_.conjugate()); }

DensityMatrix::DensityMatrix(Dims dims, Matrix matrix) : dims_(std::move(dims)) {
  const auto D = total_dim(dims_);
  if (static_cast<std::size_t>(matrix.rows()) != D || matrix.rows() != matrix.cols())
    throw DimensionError("DensityMatrix: matrix size does not match dims");
  if (!is_hermitian(matrix, kStateTol)) throw Error("DensityMatrix: matrix is not Hermitian");
  matrix_ = (matrix + matrix.adjoint()) / 2.0;
  if (std::abs(matrix_.trace().real() - 1.0) > kStateTol)
    throw Error("DensityMatrix: trace is not 1");
  if (hermitian_eigenvalues(matrix_).minCoeff() < -kStateTol)
    throw Error("DensityMatrix: matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
  return DensityMatrix(psi.dims(), psi.amplitudes() * psi.amplitudes().adjoint());
}

double DensityMatrix::purity() const { return (matrix_ * matrix_).trace().real(); }

// ---------------------------------------------------------------------------

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const Matrix id = Matrix::Identity(m.rows(), m.cols());
  return (m * m.adjoint() - id).cwiseAbs().maxCoeff() <= tol;
}

bool is_psd(const Matrix& m, double tol) {
  return is_hermitian(m, tol) && hermitian_eigenvalues(m).minCoeff() >= -tol;
}

bool is_binary_observable(const Matrix& m, double tol) {
  return is_hermitian(m, tol) && is_unitary(m, tol);
}

double frobenius(const Matrix& m) { return m.norm(); }

double max_imag(const Matrix& m) { return m.size() == 0 ? 0.0 : m.imag().cwiseAbs().maxCoeff(); }

namespace pauli {

Matrix I() { return Matrix::Identity(2, 2); }

Matrix X() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix Y() {
  Matrix m(2, 2);
  m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  return m;
}

Matrix Z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix H() { return (X() + Z()) / std::numbers::sqrt2; }

Matrix S() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, cplx(0.0, 1.0);
  return m;
}

Matrix identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return Matrix::Identity(d, d);
}

}  // namespace pauli

StateVector phi_plus() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::numbers::sqrt2;
  return StateVector({2, 2}, v);
}

// ---------------------------------------------------------------------------

Matrix tensor(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector tensor(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Matrix tensor(const std::vector<Matrix>& factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = tensor(out, f);
  return out;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return StateVector::normalized(std::move(dims), tensor(a.amplitudes(), b.amplitudes()));
}

Matrix embed(const Matrix& op, const Dims& dims, const Subsystems& targets) {
  check_subsystems(targets, dims.size(), "embed");
  std::size_t dt = 1;
  for (auto s : targets) dt *= dims[s];
  if (op.rows() != op.cols() || static_cast<std::size_t>(op.rows()) != dt)
    throw DimensionError("embed: operator dimension does not match target subsystems");
  std::vector<std::size_t> sub, rest;
  split_indices(dims, targets, sub, rest);
  const auto D = static_cast<Eigen::Index>(sub.size());
  Matrix out = Matrix::Zero(D, D);
  for (Eigen::Index r = 0; r < D; ++r)
    for (Eigen::Index c = 0; c < D; ++c)
      if (rest[r] == rest[c])
        out(r, c) = op(static_cast<Eigen::Index>(sub[r]), static_cast<Eigen::Index>(sub[c]));
  return out;
}

Dims permute_dims(const Dims& dims, const Subsystems& order) {
  Dims out(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[k] = dims.at(order[k]);
  return out;
}

namespace {

Vector permute_amplitudes(const Vector& v, const Dims& dims, const Subsystems& order) {
  const auto map = permutation_map(dims, order);
  Vector out(v.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    out(static_cast<Eigen::Index>(map[i])) = v(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace

StateVector permute_subsystems(const StateVector& psi, const Subsystems& order) {
  return StateVector(permute_dims(psi.dims(), order),
                     permute_amplitudes(psi.amplitudes(), psi.dims(), order));
}

Matrix permute_subsystems(const Matrix& op, const Dims& dims, const Subsystems& order) {
  if (static_cast<std::size_t>(op.rows()) != total_dim(dims) || op.rows() != op.cols())
    throw DimensionError("permute_subsystems: operator dimension does not match dims");
  const auto map = permutation_map(dims, order);
  Matrix out(op.rows(), op.cols());
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j)
      out(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) =
          op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

// ---------------------------------------------------------------------------

double expectation(const StateVector& psi, const Matrix& m) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != psi.dim())
    throw DimensionError("expectation: operator dimension does not match state");
  const cplx value = psi.amplitudes().dot(m * psi.amplitudes());
  if (std::abs(value.imag()) > kDefaultTol)
    throw Error("expectation: non-negligible imaginary part (operator not Hermitian?)");
  return value.real();
}

double expectation(const DensityMatrix& rho, const Matrix& m) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != rho.dim())
    throw DimensionError("expectation: operator dimension does not match state");
  const cplx value = (rho.matrix() * m).trace();
  if (std::abs(value.imag()) > kDefaultTol)
    throw Error("expectation: non-negligible imaginary part (operator not Hermitian?)");
  return value.real();
}

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystems keep) {
  std::sort(keep.begin(), keep.end());
  check_subsystems(keep, rho.num_subsystems(), "partial_trace");
  std::vector<std::size_t> sub, rest;
  split_indices(rho.dims(), keep, sub, rest);
  Dims kept_dims;
  for (auto s : keep) kept_dims.push_back(rho.dims()[s]);
  const auto dk = static_cast<Eigen::Index>(total_dim(kept_dims));
  Matrix out = Matrix::Zero(dk, dk);
  const auto D = static_cast<Eigen::Index>(sub.size());
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j)
      if (rest[i] == rest[j])
        out(static_cast<Eigen::Index>(sub[i]), static_cast<Eigen::Index>(sub[j])) +=
            rho.matrix()(i, j);
  return DensityMatrix(std::move(kept_dims), std::move(out));
}

DensityMatrix partial_trace(const StateVector& psi, Subsystems keep) {
  std::sort(keep.begin(), keep.end());
  check_subsystems(keep, psi.num_subsystems(), "partial_trace");
  Subsystems order = keep;
  const auto rest = complement(keep, psi.num_subsystems());
  order.insert(order.end(), rest.begin(), rest.end());
  const auto permuted = permute_subsystems(psi, order);
  Dims kept_dims;
  for (auto s : keep) kept_dims.push_back(psi.dims()[s]);
  const auto dk = static_cast<Eigen::Index>(total_dim(kept_dims));
  const auto dr = static_cast<Eigen::Index>(psi.dim()) / dk;
  const Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      block(permuted.amplitudes().data(), dk, dr);
  return DensityMatrix(std::move(kept_dims), block * block.adjoint());
}

Vector SchmidtDecomposition::reconstruct() const {
  const Eigen::Index dl = left_basis.rows();
  const Eigen::Index dr = right_basis.rows();
  Vector permuted = Vector::Zero(dl * dr);
  for (Eigen::Index k = 0; k < coefficients.size(); ++k)
    permuted += coefficients(k) * tensor(Vector(left_basis.col(k)), Vector(right_basis.col(k)));
  Subsystems order = left;
  order.insert(order.end(), right.begin(), right.end());
  return permute_amplitudes(permuted, permute_dims(dims, order), inverse_order(order));
}

SchmidtDecomposition schmidt(const StateVector& psi, Subsystems left, double cutoff) {
  std::sort(left.begin(), left.end());
  check_subsystems(left, psi.num_subsystems(), "schmidt");
  const auto right = complement(left, psi.num_subsystems());
  if (left.empty() || right.empty()) throw DimensionError("schmidt: cut has an empty side");

  Subsystems order = left;
  order.insert(order.end(), right.begin(), right.end());
  const auto permuted = permute_subsystems(psi, order);
  std::size_t dl = 1;
  for (auto s : left) dl *= psi.dims()[s];
  const auto rows = static_cast<Eigen::Index>(dl);
  const auto cols = static_cast<Eigen::Index>(psi.dim() / dl);
  const Matrix block =
      Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          permuted.amplitudes().data(), rows, cols);

  Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double threshold = cutoff * (s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > threshold && s(rank) > 0.0) ++rank;

  SchmidtDecomposition out;
  out.coefficients = s.head(rank);
  out.left_basis = svd.matrixU().leftCols(rank);
  // block = U S V^dag, so the right Schmidt vectors are the conjugated columns of V.
  out.right_basis = svd.matrixV().leftCols(rank).conjugate();
  out.left = std::move(left);
  out.right = right;
  out.dims = psi.dims();
  return out;
}

Matrix support_projector(const StateVector& psi, Subsystems side, double tol) {
  const auto dec = schmidt(psi, std::move(side), tol);
  return dec.left_basis * dec.left_basis.adjoint();
}

Matrix herm_expm(const Matrix& h, double t) {
  if (!is_hermitian(h, kDefaultTol)) throw PreconditionError("herm_expm: matrix is not Hermitian");
  const Matrix sym = (h + h.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  const Eigen::VectorXd& evals = solver.eigenvalues();
  Vector phases(evals.size());
  for (Eigen::Index k = 0; k < evals.size(); ++k) phases(k) = std::exp(cplx(0.0, -evals(k) * t));
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index) {
  // splitmix64 finalizer applied twice over (root, index).
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(root) ^ (index * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL));
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::stream(std::uint64_t root, std::uint64_t index) { return Rng(mix_seed(root, index)); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error("Rng::below: empty range");
  const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(k, n - 1);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t sample_index(const double* probs, std::size_t n, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (probs[k] <= 0.0) continue;
    last_positive = k;
    cumulative += probs[k];
    if (u < cumulative) return k;
  }
  return last_positive;
}

namespace {

void check_binary(const Matrix& m, std::size_t dim) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != dim)
    throw DimensionError("measure: observable dimension does not match state");
  if (!is_binary_observable(m, kDefaultTol))
    throw PreconditionError("measure: observable is not Hermitian and unitary");
}

std::array<double, 2> normalize_probabilities(double plus, double minus) {
  if (std::abs(plus + minus - 1.0) > 1e-9)
    throw Error("measure: outcome probabilities do not sum to 1");
  return {std::max(plus, 0.0), std::max(minus, 0.0)};
}

}  // namespace

std::array<double, 2> outcome_probabilities(const StateVector& psi, const Matrix& m) {
  check_binary(m, psi.dim());
  const Vector mpsi = m * psi.amplitudes();
  const double plus = ((psi.amplitudes() + mpsi) / 2.0).squaredNorm();
  const double minus = ((psi.amplitudes() - mpsi) / 2.0).squaredNorm();
  return normalize_probabilities(plus, minus);
}

std::array<double, 2> outcome_probabilities(const DensityMatrix& rho, const Matrix& m) {
  check_binary(m, rho.dim());
  const double mean = (rho.matrix() * m).trace().real();
  return normalize_probabilities((1.0 + mean) / 2.0, (1.0 - mean) / 2.0);
}

MeasurementResult measure(const StateVector& psi, const Matrix& m, Rng& rng) {
  const auto probs = outcome_probabilities(psi, m);
  const std::size_t k = sample_index(probs.data(), 2, rng.uniform());
  const int outcome = k == 0 ? 1 : -1;
  const Vector projected = (psi.amplitudes() + static_cast<double>(outcome) * (m * psi.amplitudes())) / 2.0;
  return {outcome, StateVector::normalized(psi.dims(), projected)};
}

MixedMeasurementResult measure(const DensityMatrix& rho, const Matrix& m, Rng& rng) {
  const auto probs = outcome_probabilities(rho, m);
  const std::size_t k = sample_index(probs.data(), 2, rng.uniform());
  const int outcome = k == 0 ? 1 : -1;
  const Matrix proj = (Matrix::Identity(m.rows(), m.cols()) + static_cast<double>(outcome) * m) / 2.0;
  const Matrix post = proj * rho.matrix() * proj;
  return {outcome, DensityMatrix(rho.dims(), post / post.trace().real())};
}

// ---------------------------------------------------------------------------

PauliBlocks pauli_decompose(const Matrix& m, std::size_t qubit, const Dims& dims) {
  if (qubit >= dims.size()) throw DimensionError("pauli_decompose: qubit index out of range");
  if (dims[qubit] != 2) throw DimensionError("pauli_decompose: indexed subsystem is not a qubit");
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != total_dim(dims))
    throw DimensionError("pauli_decompose: operator dimension does not match dims");

  Subsystems order{qubit};
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (k != qubit) order.push_back(k);
  const Matrix p = permute_subsystems(m, dims, order);
  const Eigen::Index r = p.rows() / 2;
  const Matrix b00 = p.topLeftCorner(r, r);
  const Matrix b01 = p.topRightCorner(r, r);
  const Matrix b10 = p.bottomLeftCorner(r, r);
  const Matrix b11 = p.bottomRightCorner(r, r);
  const cplx i(0.0, 1.0);

  PauliBlocks out;
  out.blocks[static_cast<int>(Pauli::I)] = (b00 + b11) / 2.0;
  out.blocks[static_cast<int>(Pauli::X)] = (b01 + b10) / 2.0;
  out.blocks[static_cast<int>(Pauli::Y)] = i * (b01 - b10) / 2.0;
  out.blocks[static_cast<int>(Pauli::Z)] = (b00 - b11) / 2.0;
  return out;
}

Matrix PauliBlocks::reconstruct(std::size_t qubit, const Dims& dims) const {
  const std::array<Matrix, 4> paulis{pauli::I(), pauli::X(), pauli::Y(), pauli::Z()};
  Matrix permuted = Matrix::Zero(2 * blocks[0].rows(), 2 * blocks[0].cols());
  for (int k = 0; k < 4; ++k) permuted += tensor(paulis[k], blocks[k]);
  Subsystems order{qubit};
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (k != qubit) order.push_back(k);
  return permute_subsystems(permuted, permute_dims(dims, order), inverse_order(order));
}

// ---------------------------------------------------------------------------

namespace random {

Matrix ginibre(std::size_t dim, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      m(i, j) = cplx(re, im) / std::numbers::sqrt2;
    }
  return m;
}

Matrix hermitian(std::size_t dim, Rng& rng) {
  const Matrix g = ginibre(dim, rng);
  return (g + g.adjoint()) / 2.0;
}

Matrix unitary(std::size_t dim, Rng& rng) {
  const Matrix g = ginibre(dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  Vector phases(r.rows());
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    const double mag = std::abs(r(k, k));
    phases(k) = mag == 0.0 ? cplx(1.0) : r(k, k) / mag;
  }
  return q * phases.asDiagonal();
}

Matrix psd(std::size_t dim, Rng& rng) {
  const Matrix g = ginibre(dim, rng);
  return g * g.adjoint() / static_cast<double>(dim);
}

Matrix binary_observable(std::size_t dim, Rng& rng) {
  const Matrix u = unitary(dim, rng);
  Vector signs(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < signs.size(); ++k) signs(k) = rng.uniform() < 0.5 ? 1.0 : -1.0;
  return u * signs.asDiagonal() * u.adjoint();
}

StateVector state(const Dims& dims, Rng& rng) {
  const auto D = static_cast<Eigen::Index>(total_dim(dims));
  Vector v(D);
  for (Eigen::Index k = 0; k < D; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(k) = cplx(re, im);
  }
  return StateVector::normalized(dims, v);
}

}  // namespace random

}  // namespace conjsim
