#pragma once

// Shared fixtures for the test suites: the scalar worked example, the
// zero-Pi triple, and small random-matrix helpers.

#include <cmath>
#include <cstdint>
#include <random>

#include "gbdt/linalg.hpp"
#include "gbdt/triple.hpp"

namespace gbdt::testing {

/// n = 1, m1 = m2 = 1, A = i/2, S0 = 1, Pi0 = (sqrt 2, 1).
inline GBDTTriple ex1() {
  GBDTTriple t;
  t.sig = {1, 1};
  t.A = CMatrix::Constant(1, 1, Complex(0.0, 0.5));
  t.S0 = CMatrix::Constant(1, 1, 1.0);
  t.Pi0.resize(1, 2);
  t.Pi0 << std::sqrt(2.0), 1.0;
  return t;
}

/// Pi0 = 0 with A = diag of upper half-plane points, S0 = I.
inline GBDTTriple zero_pi(int n = 2, int m1 = 1, int m2 = 1) {
  GBDTTriple t;
  t.sig = {m1, m2};
  t.A = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) t.A(k, k) = Complex(0.3 * k - 0.2, 1.0);
  t.S0 = CMatrix::Identity(n, n);
  t.Pi0 = CMatrix::Zero(n, m1 + m2);
  return t;
}

/// Pi0 = 0 with diagonal real A, S0 = I: the identity holds since A is
/// Hermitian and commutes with S0.
inline GBDTTriple zero_pi_hermitian(int n = 2, int m1 = 1, int m2 = 1) {
  GBDTTriple t = zero_pi(n, m1, m2);
  for (int k = 0; k < n; ++k) t.A(k, k) = 1.0 + 0.5 * k;
  return t;
}

inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                             Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> nd;
  CMatrix M(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = nd(rng);
      const double im = nd(rng);
      M(r, c) = scale * Complex(re, im);
    }
  }
  return M;
}

inline CMatrix random_unitary(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, n, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

inline double max_abs(const CMatrix& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

inline CMatrix scalar(Complex z) { return CMatrix::Constant(1, 1, z); }

}  // namespace gbdt::testing
