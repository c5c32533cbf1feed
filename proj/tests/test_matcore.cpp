#include "conjsim/matcore.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace conjsim;
using oracle::kInvSqrt2;

TEST_SUITE("matcore") {

TEST_CASE("state vector and density matrix validation") {
  CHECK_NOTHROW(StateVector({2}, oracle::ket({1, 0})));
  CHECK_THROWS_AS(StateVector({2}, oracle::ket({1, 1})), Error);
  CHECK_THROWS_AS(StateVector({3}, oracle::ket({1, 0})), DimensionError);
  CHECK_THROWS_AS(StateVector::normalized({2}, oracle::ket({0, 0})), Error);

  CHECK_NOTHROW(DensityMatrix({2}, oracle::I2() / 2.0));
  CHECK_THROWS_AS(DensityMatrix({2}, oracle::I2()), Error);                 // trace 2
  CHECK_THROWS_AS(DensityMatrix({2}, oracle::mat2(1, 1, 0, 0)), Error);    // not Hermitian
  CHECK_THROWS_AS(DensityMatrix({2}, oracle::mat2(1.5, 0, 0, -0.5)), Error);  // negative
}

TEST_CASE("predicates") {
  CHECK(is_hermitian(oracle::Y()));
  CHECK_FALSE(is_hermitian(oracle::mat2(0, 1, 0, 0)));
  CHECK(is_unitary(pauli::H()));
  CHECK_FALSE(is_unitary(oracle::mat2(1, 1, 0, 1)));
  CHECK(is_psd(oracle::mat2(1, 0, 0, 0)));
  CHECK_FALSE(is_psd(oracle::Z()));
  CHECK(is_binary_observable((oracle::X() + oracle::Z()) * kInvSqrt2));
  CHECK_FALSE(is_binary_observable(oracle::X() + oracle::Z()));
}

TEST_CASE("tensor matches the index-loop Kronecker product") {
  CHECK(oracle::max_abs(tensor(oracle::I2(), oracle::I2()) - Matrix::Identity(4, 4)) == 0.0);
  const Matrix xz = tensor(oracle::X(), oracle::Z());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          CHECK(xz(2 * i + k, 2 * j + l) == oracle::X()(i, j) * oracle::Z()(k, l));
  const Vector zz_phi = tensor(oracle::Z(), oracle::Z()) * oracle::phi_plus();
  CHECK(oracle::max_abs(zz_phi - oracle::phi_plus()) < 1e-15);
}

TEST_CASE("tensor is associative and mixed-product compatible") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random::ginibre(2, rng), b = random::ginibre(3, rng), c = random::ginibre(2, rng),
                 d = random::ginibre(3, rng);
    CHECK(oracle::max_abs(tensor(a, b) - oracle::kron(a, b)) < 1e-12);
    CHECK(oracle::max_abs(tensor(tensor(a, b), c) - tensor(a, tensor(b, c))) < 1e-10);
    CHECK(oracle::max_abs(tensor(a, b) * tensor(c, d) - tensor(Matrix(a * c), Matrix(b * d))) < 1e-10);
  }
}

TEST_CASE("embed and permute agree with explicit Kronecker products") {
  Rng rng(3);
  const Matrix a = random::ginibre(2, rng), b = random::ginibre(3, rng);
  const Dims dims{2, 3, 2};
  CHECK(oracle::max_abs(embed(b, dims, {1}) - oracle::kron(oracle::kron(oracle::I2(), b), oracle::I2())) < 1e-14);
  // op on (2, 0) in that order equals swap-conjugated tensor(a, b') on (0, 2)
  const Matrix c = random::ginibre(2, rng);
  const Matrix on20 = embed(tensor(a, c), dims, {2, 0});
  const Matrix on02 = embed(tensor(c, a), dims, {0, 2});
  CHECK(oracle::max_abs(on20 - on02) < 1e-12);

  const auto psi = random::state({2, 3}, rng);
  const auto swapped = permute_subsystems(psi, {1, 0});
  CHECK(swapped.dims() == Dims{3, 2});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(swapped.amplitudes()(j * 2 + i) - psi.amplitudes()(i * 3 + j)) < 1e-15);
}

TEST_CASE("expectation reproduces EPR correlations") {
  const auto phi = phi_plus();
  CHECK(expectation(phi, oracle::kron(oracle::X(), oracle::X())) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(expectation(phi, oracle::kron(oracle::X(), oracle::Z()))) < 1e-12);
  CHECK(expectation(phi, oracle::kron(oracle::Y(), oracle::Y())) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(expectation(phi, Matrix(oracle::kron(oracle::I2(), oracle::I2()) * cplx(0, 1))), Error);
  CHECK_THROWS_AS(expectation(phi, oracle::X()), DimensionError);
}

TEST_CASE("partial trace") {
  const auto phi = phi_plus();
  CHECK(oracle::max_abs(partial_trace(phi, {0}).matrix() - oracle::I2() / 2.0) < 1e-14);
  CHECK(oracle::max_abs(partial_trace(phi, {1}).matrix() - oracle::I2() / 2.0) < 1e-14);
  const auto rho = DensityMatrix::from_pure(phi);
  CHECK(oracle::max_abs(partial_trace(rho, {0, 1}).matrix() - rho.matrix()) < 1e-15);

  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto psi = random::state({2, 3, 2}, rng);
    const Matrix full = psi.amplitudes() * psi.amplitudes().adjoint();
    const Matrix ab = oracle::trace_second(full, 6, 2);
    CHECK(oracle::max_abs(partial_trace(psi, {0, 1}).matrix() - ab) < 1e-13);
    CHECK(oracle::max_abs(partial_trace(psi, {1, 2}).matrix() - oracle::trace_first(full, 2, 6)) < 1e-13);
    CHECK(std::abs(partial_trace(psi, {1}).matrix().trace() - 1.0) < 1e-12);
  }

  // Product state factors.
  const Matrix ra = random::psd(2, rng), rb = random::psd(3, rng);
  const DensityMatrix prod({2, 3}, tensor(Matrix(ra / ra.trace()), Matrix(rb / rb.trace())));
  CHECK(oracle::max_abs(partial_trace(prod, {0}).matrix() - ra / ra.trace()) < 1e-12);
}

TEST_CASE("schmidt decomposition") {
  auto s = schmidt(phi_plus(), {0});
  REQUIRE(s.rank() == 2);
  CHECK(s.coefficients(0) == doctest::Approx(kInvSqrt2));
  CHECK(s.coefficients(1) == doctest::Approx(kInvSqrt2));
  CHECK(schmidt(StateVector::basis({2, 2}, 0), {0}).rank() == 1);

  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const auto psi = random::state({2, 3}, rng);
    const auto d = schmidt(psi, {0});
    CHECK(oracle::max_abs(d.reconstruct() - psi.amplitudes()) < 1e-10);
    CHECK(std::abs(d.coefficients.squaredNorm() - 1.0) < 1e-10);
    CHECK(oracle::max_abs(d.left_basis.adjoint() * d.left_basis - Matrix::Identity(d.rank(), d.rank())) < 1e-10);
    CHECK(oracle::max_abs(d.right_basis.adjoint() * d.right_basis - Matrix::Identity(d.rank(), d.rank())) < 1e-10);
  }
  // Non-contiguous cut.
  const auto psi = random::state({2, 2, 3}, rng);
  CHECK(oracle::max_abs(schmidt(psi, {0, 2}).reconstruct() - psi.amplitudes()) < 1e-10);
}

TEST_CASE("support projector") {
  CHECK(oracle::max_abs(support_projector(phi_plus(), {0}) - oracle::I2()) < 1e-12);
  CHECK(oracle::max_abs(support_projector(StateVector::basis({2, 2}, 0), {0}) - oracle::mat2(1, 0, 0, 0)) < 1e-12);

  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    // Rank-deficient on the 4-dim side.
    const auto small = random::state({2, 2}, rng);
    const auto psi = permute_subsystems(tensor(small, StateVector::basis({2}, 1)), {0, 2, 1});
    const Matrix p = support_projector(psi, {1, 2});
    CHECK(oracle::max_abs(p * p - p) < 1e-10);
    CHECK(oracle::max_abs(p - p.adjoint()) < 1e-10);
    const Matrix leak = embed(Matrix(Matrix::Identity(4, 4) - p), psi.dims(), {1, 2});
    CHECK((leak * psi.amplitudes()).norm() < 1e-9);
    CHECK(std::abs(p.trace() - 2.0) < 1e-10);
  }
}

TEST_CASE("herm_expm") {
  CHECK(oracle::max_abs(herm_expm(Matrix::Zero(3, 3), 2.0) - Matrix::Identity(3, 3)) < 1e-14);
  CHECK(oracle::max_abs(herm_expm(oracle::Z(), std::numbers::pi) + oracle::I2()) < 1e-12);
  CHECK(oracle::max_abs(herm_expm(oracle::Y(), std::numbers::pi / 2) - oracle::mat2(0, -1, 1, 0)) < 1e-12);
  CHECK_THROWS_AS(herm_expm(oracle::mat2(0, 1, 0, 0), 1.0), PreconditionError);

  Rng rng(29);
  for (std::size_t d = 1; d <= 8; ++d) {
    const Matrix h = random::hermitian(d, rng);
    const Matrix u = herm_expm(h, 0.8);
    CHECK(is_unitary(u));
    CHECK(oracle::max_abs(u * herm_expm(h, -0.8) - Matrix::Identity(d, d)) < 1e-9);
  }
}

TEST_CASE("measurement") {
  Rng rng(1);
  const auto zero = StateVector::basis({2}, 0);
  for (int t = 0; t < 20; ++t) {
    const auto r = measure(zero, oracle::Z(), rng);
    CHECK(r.outcome == 1);
    CHECK(oracle::max_abs(r.post_state.amplitudes() - oracle::ket({1, 0})) < 1e-15);
  }
  const auto px = outcome_probabilities(zero, oracle::X());
  CHECK(px[0] == doctest::Approx(0.5));
  CHECK(px[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(measure(zero, oracle::X() * 2.0, rng), PreconditionError);

  // Empirical mean of X_A on phi+ against expectation().
  const Matrix xa = tensor(oracle::X(), oracle::I2());
  Rng r1(2024);
  const int n = 100000;
  long sum = 0;
  for (int k = 0; k < n; ++k) sum += measure(phi_plus(), xa, r1).outcome;
  CHECK(std::abs(static_cast<double>(sum) / n) < 3.0 / std::sqrt(n));

  // Random states and observables within 4 sigma.
  Rng r2(99);
  for (int t = 0; t < 5; ++t) {
    const auto psi = random::state({3}, r2);
    const Matrix m = random::binary_observable(3, r2);
    const double e = expectation(psi, m);
    long s = 0;
    for (int k = 0; k < n; ++k) s += measure(psi, m, r2).outcome;
    const double sigma = std::sqrt(std::max(1e-12, 1.0 - e * e) / n);
    CHECK(std::abs(static_cast<double>(s) / n - e) <= 4.0 * sigma + 1e-12);
  }

  // Same seed, same draws.
  Rng a(77), b(77);
  for (int k = 0; k < 50; ++k) CHECK(measure(phi_plus(), xa, a).outcome == measure(phi_plus(), xa, b).outcome);
}

TEST_CASE("mixed-state measurement") {
  Rng rng(4);
  const DensityMatrix rho({2}, oracle::mat2(0.75, 0, 0, 0.25));
  const auto p = outcome_probabilities(rho, oracle::Z());
  CHECK(p[0] == doctest::Approx(0.75));
  const auto r = measure(rho, oracle::Z(), rng);
  CHECK(std::abs(r.post_state.matrix()(r.outcome == 1 ? 0 : 1, r.outcome == 1 ? 0 : 1) - 1.0) < 1e-12);
}

TEST_CASE("pauli decomposition") {
  const auto px = pauli_decompose(oracle::X(), 0, {2});
  CHECK(std::abs(px[Pauli::X](0, 0) - 1.0) < 1e-15);
  CHECK(oracle::max_abs(px[Pauli::I]) < 1e-15);
  CHECK(oracle::max_abs(px[Pauli::Y]) < 1e-15);

  Rng rng(8);
  const Matrix a = random::ginibre(3, rng), b = random::ginibre(3, rng);
  const Matrix m = oracle::kron(oracle::X(), a) + oracle::kron(oracle::Z(), b);
  const auto blocks = pauli_decompose(m, 0, {2, 3});
  CHECK(oracle::max_abs(blocks[Pauli::X] - a) < 1e-12);
  CHECK(oracle::max_abs(blocks[Pauli::Z] - b) < 1e-12);
  CHECK(oracle::max_abs(blocks[Pauli::I]) < 1e-12);
  CHECK(oracle::max_abs(blocks.reconstruct(0, {2, 3}) - m) < 1e-12);

  // Decomposition on a trailing qubit.
  const Matrix m2 = oracle::kron(a, oracle::Y());
  const auto b2 = pauli_decompose(m2, 1, {3, 2});
  CHECK(oracle::max_abs(b2[Pauli::Y] - a) < 1e-12);
  CHECK(oracle::max_abs(b2.reconstruct(1, {3, 2}) - m2) < 1e-12);

  // C(Y) = Z (x) Y on the flag: I block 0, Z block Y; on the data qubit the Y block is Z.
  const Matrix cy = oracle::lift(oracle::Y());
  const auto on_flag = pauli_decompose(cy, 0, {2, 2});
  CHECK(oracle::max_abs(on_flag[Pauli::I]) < 1e-15);
  CHECK(oracle::max_abs(on_flag[Pauli::Z] - oracle::Y()) < 1e-15);
  const auto on_data = pauli_decompose(cy, 1, {2, 2});
  CHECK(oracle::max_abs(on_data[Pauli::Y] - oracle::Z()) < 1e-15);

  Rng r3(12);
  for (int t = 0; t < 20; ++t) {
    const Matrix g = random::ginibre(8, r3);
    for (std::size_t q = 0; q < 3; ++q)
      CHECK(oracle::max_abs(pauli_decompose(g, q, {2, 2, 2}).reconstruct(q, {2, 2, 2}) - g) < 1e-10);
  }
}

TEST_CASE("rng streams are deterministic and independent of order") {
  Rng a = Rng::stream(5, 3), b = Rng::stream(5, 3), c = Rng::stream(5, 4);
  const auto xa = a.next(), xb = b.next(), xc = c.next();
  CHECK(xa == xb);
  CHECK(xa != xc);
  Rng u(1);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(3) < 3);
  }
  const double probs[3] = {0.2, 0.0, 0.8};
  CHECK(sample_index(probs, 3, 0.1) == 0);
  CHECK(sample_index(probs, 3, 0.2) == 2);
  CHECK(sample_index(probs, 3, 0.999) == 2);
}

TEST_CASE("random objects satisfy their classes") {
  Rng rng(31);
  for (std::size_t d = 1; d <= 6; ++d) {
    CHECK(is_hermitian(random::hermitian(d, rng)));
    CHECK(is_unitary(random::unitary(d, rng)));
    CHECK(is_psd(random::psd(d, rng)));
    CHECK(is_binary_observable(random::binary_observable(d, rng)));
  }
}

}  // TEST_SUITE
