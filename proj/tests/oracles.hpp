#pragma once

// Independent reference implementations used as test oracles. They use plain
// index loops instead of the library's code paths.

#include "conjsim/matcore.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

using conjsim::cplx;
using conjsim::Dims;
using conjsim::Matrix;
using conjsim::Vector;

inline constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
inline const cplx kI{0.0, 1.0};

inline Matrix mat2(cplx a, cplx b, cplx c, cplx d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Matrix X() { return mat2(0, 1, 1, 0); }
inline Matrix Y() { return mat2(0, -kI, kI, 0); }
inline Matrix Z() { return mat2(1, 0, 0, -1); }
inline Matrix I2() { return mat2(1, 0, 0, 1); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index k = 0; k < b.size(); ++k) out(i * b.size() + k) = a(i) * b(k);
  return out;
}

inline Vector ket(std::initializer_list<cplx> amps) {
  Vector v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index k = 0;
  for (auto a : amps) v(k++) = a;
  return v;
}

inline Vector phi_plus() { return ket({kInvSqrt2, 0, 0, kInvSqrt2}); }

/// Trace out the second factor of a (da*db)-dim operator.
inline Matrix trace_second(const Matrix& rho, Eigen::Index da, Eigen::Index db) {
  Matrix out = Matrix::Zero(da, da);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j)
      for (Eigen::Index k = 0; k < db; ++k) out(i, j) += rho(i * db + k, j * db + k);
  return out;
}

/// Trace out the first factor.
inline Matrix trace_first(const Matrix& rho, Eigen::Index da, Eigen::Index db) {
  Matrix out = Matrix::Zero(db, db);
  for (Eigen::Index i = 0; i < db; ++i)
    for (Eigen::Index j = 0; j < db; ++j)
      for (Eigen::Index k = 0; k < da; ++k) out(i, j) += rho(k * db + i, k * db + j);
  return out;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Flag-prepended family density matrix written out term by term.
inline Matrix family_state(const Vector& psi, double a, cplx c) {
  const Vector psi_c = psi.conjugate();
  const Vector e0 = ket({1, 0}), e1 = ket({0, 1});
  const Vector v0 = kron(e0, psi), v1 = kron(e1, psi_c);
  return a * v0 * v0.adjoint() + (1.0 - a) * v1 * v1.adjoint() + c * v0 * v1.adjoint() +
         std::conj(c) * v1 * v0.adjoint();
}

/// |0><0| (x) M + |1><1| (x) M*, built blockwise.
inline Matrix lift(const Matrix& m) {
  const auto d = m.rows();
  Matrix out = Matrix::Zero(2 * d, 2 * d);
  out.topLeftCorner(d, d) = m;
  out.bottomRightCorner(d, d) = m.conjugate();
  return out;
}

/// Feasible (a, c) grid with real and complex extremes.
struct GridPoint {
  double a;
  cplx c;
};

inline std::vector<GridPoint> family_grid() {
  std::vector<GridPoint> g;
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double r = std::sqrt(a * (1.0 - a));
    g.push_back({a, 0.0});
    if (r > 0.0) {
      g.push_back({a, r});
      g.push_back({a, -r});
      g.push_back({a, r * kI});
      g.push_back({a, r * std::exp(kI * 0.7)});
      g.push_back({a, 0.5 * r});
    }
  }
  return g;
}

}  // namespace oracle
