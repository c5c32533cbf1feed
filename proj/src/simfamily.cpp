#include "conjsim/simfamily.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace conjsim {

namespace {

Matrix block_diag(const Matrix& upper, const Matrix& lower) {
  Matrix out = Matrix::Zero(upper.rows() + lower.rows(), upper.cols() + lower.cols());
  out.topLeftCorner(upper.rows(), upper.cols()) = upper;
  out.bottomRightCorner(lower.rows(), lower.cols()) = lower;
  return out;
}

double min_hermitian_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// rho = sum_{ij} g_ij |v_i><v_j| for the 2x2 flag Gram matrix of (a, c).
Matrix mix_branches(const Vector& v0, const Vector& v1, const SimParams& p) {
  return p.a * v0 * v0.adjoint() + (1.0 - p.a) * v1 * v1.adjoint() +
         p.c * v0 * v1.adjoint() + std::conj(p.c) * v1 * v0.adjoint();
}

}  // namespace

// ---------------------------------------------------------------------------

SimParams SimParams::from_polar(double a, double c_abs, double c_phase) {
  return SimParams{a, std::polar(c_abs, c_phase)};
}

bool SimParams::feasible(double tol) const {
  if (!(a >= -tol && a <= 1.0 + tol)) return false;
  const double clamped = std::clamp(a, 0.0, 1.0);
  return std::abs(c) <= std::sqrt(clamped * (1.0 - clamped)) + tol;
}

void SimParams::validate() const {
  if (!feasible())
    throw PreconditionError("SimParams: infeasible (need 0 <= a <= 1 and |c| <= sqrt(a(1-a)))");
}

Povm::Povm(std::vector<Matrix> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw PreconditionError("Povm: no elements");
  const auto d = elements_.front().rows();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& e : elements_) {
    if (e.rows() != d || e.cols() != d) throw DimensionError("Povm: elements differ in dimension");
    if (!is_psd(e, kDefaultTol)) throw PreconditionError("Povm: element is not PSD");
    sum += e;
  }
  if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > kDefaultTol)
    throw PreconditionError("Povm: elements do not sum to the identity");
}

KrausMap::KrausMap(std::vector<Matrix> operators) : operators_(std::move(operators)) {
  if (operators_.empty()) throw PreconditionError("KrausMap: no operators");
  const auto d = operators_.front().cols();
  for (const auto& k : operators_)
    if (k.cols() != d || k.rows() != d)
      throw DimensionError("KrausMap: operators differ in dimension");
  if (trace_preservation_residual() > kDefaultTol)
    throw PreconditionError("KrausMap: not trace preserving");
}

double KrausMap::trace_preservation_residual() const {
  const auto d = operators_.front().cols();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& k : operators_) sum += k.adjoint() * k;
  return frobenius(sum - Matrix::Identity(d, d));
}

Matrix KrausMap::apply(const Matrix& rho) const {
  if (rho.rows() != operators_.front().cols())
    throw DimensionError("KrausMap::apply: dimension mismatch");
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& k : operators_) out += k * rho * k.adjoint();
  return out;
}

DensityMatrix KrausMap::apply(const DensityMatrix& rho) const {
  return DensityMatrix(rho.dims(), apply(rho.matrix()));
}

std::vector<double> probabilities(const DensityMatrix& rho, const Povm& povm) {
  if (povm.dim() != rho.dim()) throw DimensionError("probabilities: POVM dimension mismatch");
  std::vector<double> out;
  out.reserve(povm.size());
  for (const auto& e : povm.elements()) out.push_back((rho.matrix() * e).trace().real());
  return out;
}

DensityMatrix sim_state(const StateVector& psi, const SimParams& p) {
  p.validate();
  Dims dims{2};
  dims.insert(dims.end(), psi.dims().begin(), psi.dims().end());
  Vector zero = Vector::Zero(2), one = Vector::Zero(2);
  zero(0) = 1.0;
  one(1) = 1.0;
  const Vector v0 = tensor(zero, psi.amplitudes());
  const Vector v1 = tensor(one, Vector(psi.amplitudes().conjugate()));
  return DensityMatrix(std::move(dims), mix_branches(v0, v1, p));
}

Matrix c_of(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("c_of: matrix is not square");
  return block_diag(m, m.conjugate());
}

Povm sim_povm(const Povm& povm) {
  std::vector<Matrix> lifted;
  lifted.reserve(povm.size());
  for (const auto& e : povm.elements()) lifted.push_back(c_of(e));
  return Povm(std::move(lifted));
}

// ---------------------------------------------------------------------------

bool CPropertyReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const auto& i) { return i.passed; });
}

const CPropertyItem& CPropertyReport::item(const std::string& name) const {
  for (const auto& i : items)
    if (i.name == name) return i;
  throw Error("CPropertyReport: no item named " + name);
}

CPropertyReport c_property_suite(const CPropertyConfig& config) {
  if (config.dim == 0 || config.dim > kMaxPropertyDim)
    throw PreconditionError("c_property_suite: dim must be in [1, 8]");

  CPropertyReport report;
  report.config = config;
  const char* names[] = {"multiplicativity", "additivity",  "real_homogeneity",
                         "eigenvector_lifting", "hermiticity", "unitarity",
                         "positivity",       "trace_doubling"};
  for (const char* n : names) report.items.push_back({n, 0.0, 0, true});
  auto record = [&](std::size_t idx, double residual) {
    auto& item = report.items[idx];
    item.max_residual = std::max(item.max_residual, residual);
    ++item.checks;
  };

  const double sqrt2 = std::numbers::sqrt2;
  for (std::size_t t = 0; t < config.trials; ++t) {
    Rng rng = Rng::stream(config.seed, t);
    const Matrix m = random::ginibre(config.dim, rng);
    const Matrix n = random::ginibre(config.dim, rng);
    const double scalar = rng.normal();
    const Matrix herm = random::hermitian(config.dim, rng);
    const Matrix unit = random::unitary(config.dim, rng);
    const Matrix pos = random::psd(config.dim, rng);
    const auto d2 = static_cast<Eigen::Index>(2 * config.dim);
    const Matrix id = Matrix::Identity(d2 / 2, d2 / 2);

    record(0, frobenius(c_of(m * n) - c_of(m) * c_of(n)));
    record(1, frobenius(c_of(m + n) - c_of(m) - c_of(n)));
    record(2, frobenius(c_of(scalar * m) - scalar * c_of(m)));

    {
      Eigen::ComplexEigenSolver<Matrix> eig(m);
      const Matrix cm = c_of(m);
      double worst = 0.0;
      for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
        const Vector v = eig.eigenvectors().col(k).normalized();
        const cplx lambda = eig.eigenvalues()(k);
        Vector zero_v = Vector::Zero(d2), one_v = Vector::Zero(d2);
        zero_v.head(d2 / 2) = v;
        one_v.tail(d2 / 2) = v.conjugate();
        worst = std::max(worst, (cm * zero_v - lambda * zero_v).norm());
        worst = std::max(worst, (cm * one_v - std::conj(lambda) * one_v).norm());
      }
      record(3, worst);
    }

    // Forward preservation on members of the class, and the quantitative
    // "iff" identity on an arbitrary matrix.
    auto herm_residual = [](const Matrix& x) {
      const Matrix cx = c_of(x);
      return frobenius(cx - cx.adjoint());
    };
    record(4, herm_residual(herm));
    record(4, std::abs(herm_residual(m) - sqrt2 * frobenius(m - m.adjoint())));

    auto unit_residual = [&](const Matrix& x) {
      const Matrix cx = c_of(x);
      const auto dx = cx.rows();
      return frobenius(cx * cx.adjoint() - Matrix::Identity(dx, dx));
    };
    record(5, unit_residual(unit));
    record(5, std::abs(unit_residual(m) - sqrt2 * frobenius(m * m.adjoint() - id)));

    record(6, std::max(0.0, -min_hermitian_eigenvalue(c_of(pos))));
    record(6, std::abs(min_hermitian_eigenvalue(c_of(herm)) - min_hermitian_eigenvalue(herm)));

    record(7, std::abs(c_of(herm).trace() - 2.0 * herm.trace()));
  }

  if (config.hermitian_fixture) {
    const Matrix cx = c_of(*config.hermitian_fixture);
    record(4, frobenius(cx - cx.adjoint()));
    record(7, std::abs(cx.trace() - 2.0 * config.hermitian_fixture->trace()));
  }
  if (config.unitary_fixture) {
    const Matrix cx = c_of(*config.unitary_fixture);
    record(5, frobenius(cx * cx.adjoint() - Matrix::Identity(cx.rows(), cx.cols())));
  }
  if (config.psd_fixture) {
    record(6, std::max(0.0, -min_hermitian_eigenvalue(c_of(*config.psd_fixture))));
  }

  for (auto& item : report.items) item.passed = item.max_residual <= config.tol;
  return report;
}

// ---------------------------------------------------------------------------

DensityMatrix sim_unitary_evolve(const DensityMatrix& rho_sim, const Matrix& u) {
  if (!is_unitary(u, kDefaultTol)) throw PreconditionError("sim_unitary_evolve: U is not unitary");
  if (static_cast<std::size_t>(2 * u.rows()) != rho_sim.dim())
    throw DimensionError("sim_unitary_evolve: U does not match the data register");
  const Matrix cu = c_of(u);
  return DensityMatrix(rho_sim.dims(), cu * rho_sim.matrix() * cu.adjoint());
}

KrausMap sim_kraus(const KrausMap& map) {
  std::vector<Matrix> lifted;
  lifted.reserve(map.operators().size());
  for (const auto& k : map.operators()) lifted.push_back(c_of(k));
  return KrausMap(std::move(lifted));
}

Matrix sim_hamiltonian(const Matrix& h) {
  if (!is_hermitian(h, kDefaultTol)) throw PreconditionError("sim_hamiltonian: H is not Hermitian");
  return block_diag(h, -h.conjugate());
}

double hamiltonian_identity_residual(const Matrix& h, double t) {
  return frobenius(herm_expm(sim_hamiltonian(h), t) - c_of(herm_expm(h, t)));
}

std::pair<Matrix, Matrix> flag_branches(const Matrix& op) {
  if (op.rows() != op.cols() || op.rows() % 2 != 0)
    throw DimensionError("flag_branches: operator is not flag-prepended");
  const auto r = op.rows() / 2;
  return {op.topLeftCorner(r, r), op.bottomRightCorner(r, r)};
}

// ---------------------------------------------------------------------------

Dims multiparty_dims(const Dims& data_dims) {
  Dims dims;
  for (auto d : data_dims) {
    dims.push_back(2);
    dims.push_back(d);
  }
  return dims;
}

DensityMatrix multiparty_sim_state(const StateVector& psi, std::size_t n_parties,
                                   const SimParams& p) {
  p.validate();
  if (psi.num_subsystems() != n_parties)
    throw DimensionError("multiparty_sim_state: state must have one subsystem per party");
  Dims flags_then_data(n_parties, 2);
  flags_then_data.insert(flags_then_data.end(), psi.dims().begin(), psi.dims().end());
  Subsystems interleave;
  for (std::size_t k = 0; k < n_parties; ++k) {
    interleave.push_back(k);
    interleave.push_back(n_parties + k);
  }
  const Dims flag_dims(n_parties, 2);
  const auto all_ones = total_dim(flag_dims) - 1;
  const auto v0 = permute_subsystems(tensor(StateVector::basis(flag_dims, 0), psi), interleave);
  const auto v1 =
      permute_subsystems(tensor(StateVector::basis(flag_dims, all_ones), psi.conjugate()), interleave);
  return DensityMatrix(v0.dims(), mix_branches(v0.amplitudes(), v1.amplitudes(), p));
}

Matrix lift_local_observable(const Matrix& m) {
  if (!is_binary_observable(m, kDefaultTol))
    throw PreconditionError("lift_local_observable: observable is not binary");
  return c_of(m);
}

Matrix multiparty_sim_observable(const Matrix& m, std::size_t party, const Dims& data_dims) {
  if (party >= data_dims.size()) throw DimensionError("multiparty_sim_observable: no such party");
  if (static_cast<std::size_t>(m.rows()) != data_dims[party])
    throw DimensionError("multiparty_sim_observable: observable does not match the data register");
  return embed(lift_local_observable(m), multiparty_dims(data_dims), {2 * party, 2 * party + 1});
}

// ---------------------------------------------------------------------------

Matrix real_sim_basis_change() {
  Matrix phase = Matrix::Zero(2, 2);
  phase(0, 0) = 1.0;
  phase(1, 1) = cplx(0.0, -1.0);
  return phase * pauli::H();
}

StateVector real_simulation_state(const StateVector& psi_sim) {
  if (psi_sim.dims().empty() || psi_sim.dims().front() != 2)
    throw PreconditionError("real_simulation_state: first subsystem must be the flag qubit");
  const auto half = static_cast<Eigen::Index>(psi_sim.dim() / 2);
  const Vector w0 = psi_sim.amplitudes().head(half);
  const Vector w1 = psi_sim.amplitudes().tail(half);
  // A pure |c| = 1/2 member is g (|0>psi + |1>psi*)/sqrt2 for a global phase g.
  const cplx overlap = w0.conjugate().dot(w1);  // <w0*|w1> = g^2 / 2
  if (std::abs(w0.squaredNorm() - 0.5) > 1e-9 || std::abs(std::abs(overlap) - 0.5) > 1e-9)
    throw PreconditionError("real_simulation_state: state is not a pure a = c = 1/2 member");
  const cplx g_inv = std::polar(1.0, -std::arg(overlap) / 2.0);
  const Vector w = g_inv * psi_sim.amplitudes();
  if ((w.tail(half) - w.head(half).conjugate()).norm() > 1e-9)
    throw PreconditionError("real_simulation_state: branches are not complex conjugates");
  const Matrix u = embed(real_sim_basis_change(), psi_sim.dims(), {0});
  return StateVector::normalized(psi_sim.dims(), u * w);
}

StateVector real_simulation_state(const DensityMatrix& rho_sim) {
  if (std::abs(rho_sim.purity() - 1.0) > 1e-9)
    throw PreconditionError("real_simulation_state: state is not pure");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(rho_sim.matrix());
  const auto top = solver.eigenvalues().size() - 1;
  return real_simulation_state(
      StateVector::normalized(rho_sim.dims(), solver.eigenvectors().col(top)));
}

Matrix real_simulation_operator(const Matrix& lifted) {
  if (lifted.rows() != lifted.cols() || lifted.rows() % 2 != 0)
    throw PreconditionError("real_simulation_operator: operator is not flag-prepended");
  const auto r = lifted.rows() / 2;
  const double off = std::max(lifted.topRightCorner(r, r).cwiseAbs().maxCoeff(),
                              lifted.bottomLeftCorner(r, r).cwiseAbs().maxCoeff());
  const double conj_gap =
      (lifted.bottomRightCorner(r, r) - lifted.topLeftCorner(r, r).conjugate()).cwiseAbs().maxCoeff();
  if (off > kDefaultTol || conj_gap > kDefaultTol)
    throw PreconditionError("real_simulation_operator: operator is not of the form C(M)");
  const Matrix u = tensor(real_sim_basis_change(), pauli::identity(static_cast<std::size_t>(r)));
  return u * lifted * u.adjoint();
}

}  // namespace conjsim
