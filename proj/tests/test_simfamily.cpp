#include "conjsim/simfamily.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace conjsim;
using oracle::kI;
using oracle::kInvSqrt2;

namespace {

StateVector ket_i() { return StateVector({2}, oracle::ket({kInvSqrt2, kI * kInvSqrt2})); }
StateVector ket_plus() { return StateVector({2}, oracle::ket({kInvSqrt2, kInvSqrt2})); }

Povm projective(const Matrix& m) {
  const Matrix id = Matrix::Identity(m.rows(), m.cols());
  return Povm({(id + m) / 2.0, (id - m) / 2.0});
}

}  // namespace

TEST_SUITE("simfamily") {

TEST_CASE("params feasibility") {
  CHECK(SimParams{0.5, 0.5}.feasible());
  CHECK(SimParams{0.25, cplx(0.0, std::sqrt(0.1875))}.feasible());
  CHECK_FALSE(SimParams{0.5, 0.6}.feasible());
  CHECK_FALSE(SimParams{1.2, 0.0}.feasible());
  CHECK_THROWS_AS(SimParams({0.0, 0.1}).validate(), PreconditionError);
  const auto p = SimParams::from_polar(0.5, 0.5, std::numbers::pi / 2);
  CHECK(std::abs(p.c - cplx(0.0, 0.5)) < 1e-15);
}

TEST_CASE("sim_state matches the term-by-term oracle") {
  const auto psi = ket_i();
  for (const auto& g : oracle::family_grid()) {
    const auto rho = sim_state(psi, {g.a, g.c});
    CHECK(oracle::max_abs(rho.matrix() - oracle::family_state(psi.amplitudes(), g.a, g.c)) < 1e-14);
    CHECK(rho.dims() == Dims{2, 2});
  }
  const Matrix p0 = oracle::kron(oracle::mat2(1, 0, 0, 0), psi.amplitudes() * psi.amplitudes().adjoint());
  CHECK(oracle::max_abs(sim_state(psi, {1.0, 0.0}).matrix() - p0) < 1e-15);
  const Vector pc = psi.amplitudes().conjugate();
  const Matrix p1 = oracle::kron(oracle::mat2(0, 0, 0, 1), pc * pc.adjoint());
  CHECK(oracle::max_abs(sim_state(psi, {0.0, 0.0}).matrix() - p1) < 1e-15);
  CHECK(sim_state(psi, {0.5, 0.5}).purity() == doctest::Approx(1.0));
  CHECK_THROWS_AS(sim_state(psi, {0.5, 0.7}), PreconditionError);
}

TEST_CASE("reference branch after tracing the flag") {
  const auto rho = sim_state(phi_plus(), {1.0, 0.0});
  const Vector phi = oracle::phi_plus();
  CHECK(oracle::max_abs(partial_trace(rho, {1, 2}).matrix() - phi * phi.adjoint()) < 1e-14);
}

TEST_CASE("sim_povm preserves statistics") {
  CHECK(oracle::max_abs(sim_povm(Povm({oracle::I2()})).elements()[0] - Matrix::Identity(4, 4)) < 1e-15);
  for (const auto& g : oracle::family_grid()) {
    const auto px = probabilities(sim_state(ket_plus(), {g.a, g.c}), sim_povm(projective(oracle::X())));
    CHECK(px[0] == doctest::Approx(1.0));
    CHECK(std::abs(px[1]) < 1e-12);
  }
  const auto py = probabilities(sim_state(ket_i(), {0.0, 0.0}), sim_povm(projective(oracle::Y())));
  CHECK(py[0] == doctest::Approx(1.0));

  // Random states and POVMs over the grid.
  Rng rng(41);
  for (int t = 0; t < 10; ++t) {
    const auto psi = random::state({3}, rng);
    const Matrix a = random::psd(3, rng), b = random::psd(3, rng);
    const Matrix total = a + b;
    Eigen::SelfAdjointEigenSolver<Matrix> es(total);
    const Matrix inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                            es.eigenvectors().adjoint();
    const Povm povm({inv_sqrt * a * inv_sqrt, inv_sqrt * b * inv_sqrt});
    const auto ref = probabilities(DensityMatrix::from_pure(psi), povm);
    for (const auto& g : oracle::family_grid()) {
      const auto got = probabilities(sim_state(psi, {g.a, g.c}), sim_povm(povm));
      for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(got[k] - ref[k]) < 1e-10);
    }
  }
  CHECK_THROWS_AS(Povm({oracle::I2() * 0.5}), PreconditionError);
}

TEST_CASE("c_of") {
  CHECK(oracle::max_abs(c_of(oracle::I2()) - Matrix::Identity(4, 4)) < 1e-15);
  CHECK(oracle::max_abs(c_of(oracle::Y()) - oracle::lift(oracle::Y())) < 1e-15);
  CHECK(oracle::max_abs(c_of(oracle::Y()).bottomRightCorner(2, 2) + oracle::Y()) < 1e-15);
  CHECK(std::abs(c_of(oracle::mat2(1, 0, 0, 2)).trace() - 6.0) < 1e-14);
  Rng rng(43);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = random::ginibre(3, rng);
    const Matrix alt = oracle::kron(oracle::I2(), Matrix(m.real().cast<cplx>())) +
                       kI * oracle::kron(oracle::Z(), Matrix(m.imag().cast<cplx>()));
    CHECK(oracle::max_abs(c_of(m) - alt) < 1e-12);
  }
}

TEST_CASE("property suite passes on valid inputs and names failures") {
  CPropertyConfig cfg;
  const auto report = c_property_suite(cfg);
  CHECK(report.passed());
  REQUIRE(report.items.size() == 8);
  const char* names[] = {"multiplicativity", "additivity", "real_homogeneity", "eigenvector_lifting",
                         "hermiticity", "unitarity", "positivity", "trace_doubling"};
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(report.items[k].name == names[k]);
    CHECK(report.items[k].max_residual <= 1e-10);
    CHECK(report.items[k].checks >= 100);
  }
  for (std::size_t d = 1; d <= kMaxPropertyDim; ++d) {
    CPropertyConfig c;
    c.dim = d;
    c.seed = 100 + d;
    CHECK(c_property_suite(c).passed());
  }
  CPropertyConfig bad;
  bad.dim = 9;
  CHECK_THROWS(c_property_suite(bad));

  CPropertyConfig herm;
  herm.trials = 5;
  herm.hermitian_fixture = oracle::mat2(0, 1, 0, 0);
  const auto hr = c_property_suite(herm);
  CHECK_FALSE(hr.item("hermiticity").passed);
  CHECK(hr.item("multiplicativity").passed);

  CPropertyConfig uni;
  uni.trials = 5;
  uni.unitary_fixture = oracle::mat2(1, 1, 0, 1);
  CHECK_FALSE(c_property_suite(uni).item("unitarity").passed);
}

TEST_CASE("eigenvector lifting by hand") {
  Rng rng(47);
  const Matrix m = random::ginibre(3, rng);
  Eigen::ComplexEigenSolver<Matrix> es(m);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const cplx lambda = es.eigenvalues()(k);
    const Vector v = es.eigenvectors().col(k);
    const Vector up = oracle::kron(oracle::ket({1, 0}), v);
    const Vector down = oracle::kron(oracle::ket({0, 1}), Vector(v.conjugate()));
    CHECK(oracle::max_abs(c_of(m) * up - lambda * up) < 1e-10);
    CHECK(oracle::max_abs(c_of(m) * down - std::conj(lambda) * down) < 1e-10);
  }
}

TEST_CASE("unitary evolution commutes with simulation") {
  const auto zero = StateVector::basis({2}, 0);
  for (const auto& g : oracle::family_grid()) {
    const SimParams p{g.a, g.c};
    const auto rho = sim_state(zero, p);
    CHECK(oracle::max_abs(sim_unitary_evolve(rho, oracle::I2()).matrix() - rho.matrix()) < 1e-15);
    CHECK(oracle::max_abs(sim_unitary_evolve(rho, pauli::H()).matrix() - sim_state(ket_plus(), p).matrix()) < 1e-12);
  }
  const auto s_branch = sim_unitary_evolve(sim_state(zero, {0.0, 0.0}), pauli::S());
  CHECK(std::abs(s_branch.matrix()(2, 2) - 1.0) < 1e-15);

  Rng rng(53);
  for (int t = 0; t < 10; ++t) {
    const auto psi = random::state({3}, rng);
    const Matrix u = random::unitary(3, rng);
    const auto upsi = StateVector::normalized({3}, u * psi.amplitudes());
    for (const auto& g : oracle::family_grid()) {
      const SimParams p{g.a, g.c};
      CHECK(oracle::max_abs(sim_unitary_evolve(sim_state(psi, p), u).matrix() - sim_state(upsi, p).matrix()) < 1e-10);
    }
  }
}

TEST_CASE("lifted Kraus maps") {
  const KrausMap id({oracle::I2()});
  CHECK(oracle::max_abs(sim_kraus(id).operators()[0] - Matrix::Identity(4, 4)) < 1e-15);

  const KrausMap deph({oracle::I2() * kInvSqrt2, oracle::Z() * kInvSqrt2});
  const auto psi = ket_i();
  const Matrix ref = deph.apply(Matrix(psi.amplitudes() * psi.amplitudes().adjoint()));
  const Vector pc = psi.amplitudes().conjugate();
  const Matrix conj_ref = deph.apply(Matrix(pc * pc.adjoint()));
  const auto out = sim_kraus(deph).apply(sim_state(psi, {0.5, 0.5}));
  const auto [b0, b1] = flag_branches(out.matrix());
  CHECK(oracle::max_abs(b0 - 0.5 * ref) < 1e-10);
  CHECK(oracle::max_abs(b1 - 0.5 * conj_ref) < 1e-10);

  const double gamma = 0.3;
  const KrausMap damp({oracle::mat2(1, 0, 0, std::sqrt(1 - gamma)), oracle::mat2(0, std::sqrt(gamma), 0, 0)});
  CHECK(sim_kraus(damp).trace_preservation_residual() <= 1e-10);
  CHECK_THROWS_AS(KrausMap({oracle::mat2(1, 0, 0, 0)}), PreconditionError);
}

TEST_CASE("simulated Hamiltonian") {
  CHECK(oracle::max_abs(sim_hamiltonian(Matrix::Zero(2, 2))) == 0.0);
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 1, -1, -1, 1;
  CHECK(oracle::max_abs(sim_hamiltonian(oracle::Z()) - expected) < 1e-15);
  const Matrix lhs = herm_expm(sim_hamiltonian(oracle::Y()), std::numbers::pi / 2);
  CHECK(oracle::max_abs(lhs - oracle::lift(oracle::mat2(0, -1, 1, 0))) < 1e-8);

  Rng rng(59);
  for (std::size_t d = 1; d <= 4; ++d)
    for (int t = 0; t < 25; ++t) {
      const Matrix h = random::hermitian(d, rng);
      CHECK(is_hermitian(sim_hamiltonian(h)));
      for (double time : {0.1, 1.0, std::numbers::pi}) CHECK(hamiltonian_identity_residual(h, time) <= 1e-8);
    }
}

TEST_CASE("multi-party family state") {
  const auto dims = multiparty_dims({2, 2});
  CHECK(dims == Dims{2, 2, 2, 2});
  const Vector phi = oracle::phi_plus();
  const auto ref = multiparty_sim_state(phi_plus(), 2, {1.0, 0.0});
  // [fA, dA, fB, dB] with flags 0: amplitude on |0 a 0 b>
  Vector expected = Vector::Zero(16);
  expected(0) = kInvSqrt2;
  expected(5) = kInvSqrt2;
  CHECK(oracle::max_abs(ref.matrix() - expected * expected.adjoint()) < 1e-14);

  for (const auto& g : oracle::family_grid()) {
    const auto rho = multiparty_sim_state(phi_plus(), 2, {g.a, g.c});
    const auto flags = partial_trace(rho, {0, 2});
    CHECK(std::abs(flags.matrix()(1, 1)) < 1e-12);
    CHECK(std::abs(flags.matrix()(2, 2)) < 1e-12);
    CHECK(flags.matrix()(0, 0).real() == doctest::Approx(g.a));
    // Lifted Y_A and Bob's lifted -Y give +1.
    const Matrix ya = multiparty_sim_observable(oracle::Y(), 0, {2, 2});
    const Matrix yb = multiparty_sim_observable(-oracle::Y(), 1, {2, 2});
    CHECK(expectation(rho, ya * yb) == doctest::Approx(1.0).epsilon(1e-10));
    // Joint distributions match the reference for a few observable pairs.
    for (const auto& ma : {oracle::X(), oracle::Z(), Matrix((oracle::X() + oracle::Y()) * kInvSqrt2)})
      for (const auto& mb : {oracle::X(), Matrix(-oracle::Y()), Matrix((oracle::Z() - oracle::Y()) * kInvSqrt2)}) {
        const double want = std::real(phi.dot(oracle::kron(ma, mb) * phi));
        const Matrix la = multiparty_sim_observable(ma, 0, {2, 2});
        const Matrix lb = multiparty_sim_observable(mb, 1, {2, 2});
        CHECK(std::abs(expectation(rho, la * lb) - want) < 1e-10);
      }
  }
  const auto pure = multiparty_sim_state(phi_plus(), 2, {0.5, 0.5});
  CHECK(pure.purity() == doctest::Approx(1.0));
  CHECK_THROWS_AS(multiparty_sim_state(phi_plus(), 3, {1.0, 0.0}), DimensionError);
}

TEST_CASE("lifted local observables") {
  CHECK(oracle::max_abs(lift_local_observable(oracle::Z()) - oracle::kron(oracle::I2(), oracle::Z())) < 1e-15);
  const Matrix ly = lift_local_observable(oracle::Y());
  CHECK(oracle::max_abs(ly - oracle::kron(oracle::Z(), oracle::Y())) < 1e-15);
  CHECK(is_binary_observable(ly));
}

TEST_CASE("real simulation") {
  const auto zero = StateVector::basis({2}, 0);
  const auto r0 = real_simulation_state(sim_state(zero, {0.5, 0.5}));
  CHECK(oracle::max_abs(r0.amplitudes() - oracle::ket({1, 0, 0, 0})) < 1e-12);

  const auto ri = real_simulation_state(sim_state(ket_i(), {0.5, 0.5}));
  CHECK(max_imag(Matrix(ri.amplitudes())) <= 1e-12);
  CHECK(oracle::max_abs(ri.amplitudes() - oracle::ket({kInvSqrt2, 0, 0, kInvSqrt2})) < 1e-12);

  const Matrix ry = real_simulation_operator(c_of(oracle::Y()));
  CHECK(max_imag(ry) <= 1e-12);
  const Matrix xz = oracle::X() * oracle::Z();
  CHECK(oracle::max_abs(ry - oracle::kron(xz, Matrix(oracle::Y().imag().cast<cplx>()))) < 1e-12);

  Rng rng(61);
  for (int t = 0; t < 20; ++t) {
    const auto psi = random::state({2, 2}, rng);
    const auto r = real_simulation_state(sim_state(psi, {0.5, 0.5}));
    CHECK(max_imag(Matrix(r.amplitudes())) <= 1e-12);
    const Matrix m = random::ginibre(4, rng);
    const Matrix rm = real_simulation_operator(c_of(m));
    CHECK(max_imag(rm) <= 1e-12);
    // Statistics carry over: <psi|M|psi> real part on the real simulation.
    const Matrix h = random::hermitian(4, rng);
    CHECK(std::abs(expectation(r, real_simulation_operator(c_of(h))) - expectation(psi, h)) < 1e-10);
  }
  CHECK_THROWS(real_simulation_state(sim_state(zero, {1.0, 0.0})));
  CHECK_THROWS(real_simulation_operator(oracle::kron(oracle::X(), oracle::X())));
}

}  // TEST_SUITE
