#include "gbdt/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "gbdt/errors.hpp"

namespace gbdt::linalg {

namespace {

// Padé [13/13] numerator coefficients and the largest 1-norm for which the
// unscaled approximant keeps unit-roundoff backward error.
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

double one_norm(const CMatrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

// Swaps the adjacent diagonal entries k, k+1 of an upper triangular T.
void swap_schur_pair(SchurForm& form, Eigen::Index k) {
  CMatrix& T = form.T;
  const Complex a = T(k, k);
  const Complex b = T(k + 1, k + 1);
  const Complex t = T(k, k + 1);
  Eigen::Vector2cd v(t, b - a);
  const double nv = v.norm();
  if (nv == 0.0) return;
  v /= nv;
  // First column is the eigenvector of the 2x2 block for b.
  Eigen::Matrix2cd G;
  G << v(0), -std::conj(v(1)), v(1), std::conj(v(0));
  T.middleRows(k, 2) = (G.adjoint() * T.middleRows(k, 2)).eval();
  T.middleCols(k, 2) = (T.middleCols(k, 2) * G).eval();
  form.U.middleCols(k, 2) = (form.U.middleCols(k, 2) * G).eval();
  T(k + 1, k) = Complex(0.0);
}

}  // namespace

void require_square(const CMatrix& M, std::string_view where) {
  if (M.rows() != M.cols()) {
    throw ShapeError(std::string(where) + ": matrix must be square, got " +
                     std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  }
}

void require_finite(const CMatrix& M, std::string_view where) {
  if (!M.allFinite()) {
    throw NonFiniteError(std::string(where) + ": non-finite entries");
  }
}

CMatrix mat_exp(const CMatrix& M, double tol) {
  require_square(M, "mat_exp");
  require_finite(M, "mat_exp");
  if (!(tol > 0.0)) throw Error("mat_exp: tol must be positive");
  const Eigen::Index n = M.rows();
  if (n == 0) return CMatrix(0, 0);

  const double norm1 = one_norm(M);
  if (norm1 == 0.0) return CMatrix::Identity(n, n);
  int s = 0;
  if (norm1 > kTheta13) {
    s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  }
  const CMatrix X = M / std::ldexp(1.0, s);
  const CMatrix I = CMatrix::Identity(n, n);
  const CMatrix X2 = X * X;
  const CMatrix X4 = X2 * X2;
  const CMatrix X6 = X4 * X2;
  const auto& b = kPade13;
  const CMatrix U =
      X * (X6 * (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 +
           b[5] * X4 + b[3] * X2 + b[1] * I);
  const CMatrix V = X6 * (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 +
                    b[4] * X4 + b[2] * X2 + b[0] * I;
  CMatrix R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) R = (R * R).eval();
  require_finite(R, "mat_exp result");
  return R;
}

double sylvester_residual(const CMatrix& A, const CMatrix& B, const CMatrix& C,
                          const CMatrix& X) {
  return (A * X - X * B - C).norm();
}

CVector eigenvalues(const CMatrix& A) {
  require_square(A, "eigenvalues");
  if (A.rows() == 0) return CVector(0);
  Eigen::ComplexSchur<CMatrix> schur(A, /*computeU=*/false);
  if (schur.info() != Eigen::Success) {
    throw Error("eigenvalues: Schur iteration did not converge");
  }
  return schur.matrixT().diagonal();
}

double spectral_gap(const CMatrix& A, const CMatrix& B) {
  const CVector la = eigenvalues(A);
  const CVector lb = eigenvalues(B);
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < la.size(); ++i) {
    for (Eigen::Index j = 0; j < lb.size(); ++j) {
      gap = std::min(gap, std::abs(la(i) - lb(j)));
    }
  }
  return gap;
}

CMatrix sylvester_kronecker(const CMatrix& A, const CMatrix& B,
                            const CMatrix& C) {
  const Eigen::Index p = A.rows();
  const Eigen::Index q = B.rows();
  // vec(A X - X B) = (I_q (x) A - B^T (x) I_p) vec(X), column-major vec.
  CMatrix K = CMatrix::Zero(p * q, p * q);
  for (Eigen::Index j = 0; j < q; ++j) {
    K.block(j * p, j * p, p, p) += A;
    for (Eigen::Index l = 0; l < q; ++l) {
      const Complex blj = B(l, j);
      if (blj == Complex(0.0)) continue;
      for (Eigen::Index i = 0; i < p; ++i) K(j * p + i, l * p + i) -= blj;
    }
  }
  const CVector rhs = C.reshaped();
  const CVector x = K.fullPivLu().solve(rhs);
  return x.reshaped(p, q);
}

CMatrix sylvester_bartels_stewart(const CMatrix& A, const CMatrix& B,
                                  const CMatrix& C) {
  const SchurForm sa = complex_schur(A);
  const SchurForm sb = complex_schur(B);
  const Eigen::Index p = A.rows();
  const Eigen::Index q = B.rows();
  const CMatrix F = sa.U.adjoint() * C * sb.U;
  CMatrix Y(p, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    CVector rhs = F.col(k);
    for (Eigen::Index i = 0; i < k; ++i) rhs += sb.T(i, k) * Y.col(i);
    CMatrix shifted = sa.T;
    shifted.diagonal().array() -= sb.T(k, k);
    Y.col(k) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return sa.U * Y * sb.U.adjoint();
}

CMatrix sylvester_solve(const CMatrix& A, const CMatrix& B, const CMatrix& C,
                        std::optional<double> sep_tol) {
  require_square(A, "sylvester_solve(A)");
  require_square(B, "sylvester_solve(B)");
  if (C.rows() != A.rows() || C.cols() != B.rows()) {
    throw ShapeError("sylvester_solve: C must be " + std::to_string(A.rows()) +
                     "x" + std::to_string(B.rows()));
  }
  require_finite(A, "sylvester_solve(A)");
  require_finite(B, "sylvester_solve(B)");
  require_finite(C, "sylvester_solve(C)");
  if (A.rows() == 0 || B.rows() == 0) return CMatrix::Zero(C.rows(), C.cols());

  const double tol = sep_tol.value_or(1e-10 * (A.norm() + B.norm()));
  if (!(tol > 0.0)) throw Error("sylvester_solve: sep_tol must be positive");
  const double gap = spectral_gap(A, B);
  if (!(gap > tol)) {
    throw SpectralSeparationError(
        "sylvester_solve: spectra not separated (gap " + std::to_string(gap) +
            " <= " + std::to_string(tol) + ")",
        gap);
  }
  CMatrix X = (A.rows() <= 16 && B.rows() <= 16)
                  ? sylvester_kronecker(A, B, C)
                  : sylvester_bartels_stewart(A, B, C);
  require_finite(X, "sylvester_solve result");
  return X;
}

CMatrix hermitian_part(const CMatrix& S) {
  return (S + S.adjoint()) / 2.0;
}

PosdefResult posdef_check(const CMatrix& S, double tol) {
  require_square(S, "posdef_check");
  PosdefResult out;
  if (S.rows() == 0) return out;
  out.hermitian_defect = (S - S.adjoint()).norm();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(S),
                                            Eigen::EigenvaluesOnly);
  out.min_eig = es.eigenvalues()(0);
  const double scale = S.norm();
  out.is_pd =
      out.hermitian_defect <= tol * scale && out.min_eig > tol * scale;
  return out;
}

CMatrix left_nullspace_basis(const CMatrix& M, double rank_tol) {
  if (M.rows() < 1 || M.cols() < 1) {
    throw ShapeError("left_nullspace_basis: empty matrix");
  }
  Eigen::JacobiSVD<CMatrix> svd(M, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  if (smax > 0.0) {
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > rank_tol * smax) ++rank;
    }
  }
  const Eigen::Index p = M.rows();
  return svd.matrixU().rightCols(p - rank).adjoint();
}

double smallest_singular_value(const CMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(M);
  return svd.singularValues().minCoeff();
}

HermitianFactor::HermitianFactor(const CMatrix& S) : herm_(hermitian_part(S)) {
  require_square(S, "HermitianFactor");
  require_finite(S, "HermitianFactor");
  llt_.compute(herm_);
  bool ok = llt_.info() == Eigen::Success;
  if (ok && herm_.rows() > 0) {
    ok = (llt_.matrixL().toDenseMatrix().diagonal().real().array() > 0.0)
             .all();
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm_, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues()(0);
    throw NotPositiveDefiniteError(
        "Cholesky factorization failed (min eigenvalue " +
            std::to_string(min_eig) + ")",
        min_eig);
  }
  rcond_ = herm_.rows() > 0 ? llt_.rcond() : 1.0;
}

CMatrix HermitianFactor::solve(const CMatrix& B) const {
  return llt_.solve(B);
}

CMatrix HermitianFactor::inverse() const {
  const Eigen::Index n = herm_.rows();
  return hermitian_part(llt_.solve(CMatrix::Identity(n, n)));
}

SchurForm complex_schur(const CMatrix& A) {
  require_square(A, "complex_schur");
  require_finite(A, "complex_schur");
  if (A.rows() == 0) return {CMatrix(0, 0), CMatrix(0, 0)};
  Eigen::ComplexSchur<CMatrix> schur(A);
  if (schur.info() != Eigen::Success) {
    throw Error("complex_schur: iteration did not converge");
  }
  return {schur.matrixU(), schur.matrixT()};
}

int reorder_schur(SchurForm& form,
                  const std::function<bool(Complex)>& select) {
  const Eigen::Index n = form.T.rows();
  Eigen::Index head = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!select(form.T(i, i))) continue;
    for (Eigen::Index k = i; k > head; --k) swap_schur_pair(form, k - 1);
    ++head;
  }
  return static_cast<int>(head);
}

CMatrix invariant_subspace(const CMatrix& A,
                           const std::function<bool(Complex)>& select) {
  SchurForm form = complex_schur(A);
  const int k = reorder_schur(form, select);
  return form.U.leftCols(k);
}

}  // namespace gbdt::linalg
