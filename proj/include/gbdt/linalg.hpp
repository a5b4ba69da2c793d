#pragma once

// Dense complex matrix kernel used by the transformation engines: matrix
// exponential, Sylvester solver, definiteness tests, null spaces, Cholesky
// factors of Hermitian matrices and ordered Schur invariant subspaces.
//
// All functions are pure and thread-safe.

#include <complex>
#include <functional>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace gbdt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

namespace linalg {

void require_square(const CMatrix& M, std::string_view where);
void require_finite(const CMatrix& M, std::string_view where);

/// exp(M) by scaling and squaring around a degree-13 diagonal Padé
/// approximant. The core attains unit-roundoff backward error, so `tol` is
/// validated but cannot request more accuracy than double precision carries.
CMatrix mat_exp(const CMatrix& M, double tol = 1e-14);

/// Frobenius-norm residual ||A X - X B - C||.
double sylvester_residual(const CMatrix& A, const CMatrix& B, const CMatrix& C,
                          const CMatrix& X);

/// min |lambda_i(A) - mu_j(B)| over the Schur eigenvalues of A and B.
double spectral_gap(const CMatrix& A, const CMatrix& B);

/// Solves A X - X B = C. Throws SpectralSeparationError when the spectral gap
/// does not exceed `sep_tol` (default 1e-10 (||A|| + ||B||)).
///
/// Up to 16x16 coefficients the Kronecker linearization is solved directly;
/// larger problems go through a complex Bartels-Stewart sweep.
CMatrix sylvester_solve(const CMatrix& A, const CMatrix& B, const CMatrix& C,
                        std::optional<double> sep_tol = std::nullopt);

/// The Kronecker path alone, exposed for cross-checks.
CMatrix sylvester_kronecker(const CMatrix& A, const CMatrix& B,
                            const CMatrix& C);
/// The Bartels-Stewart path alone, exposed for cross-checks.
CMatrix sylvester_bartels_stewart(const CMatrix& A, const CMatrix& B,
                                  const CMatrix& C);

struct PosdefResult {
  double hermitian_defect = 0.0;
  double min_eig = 0.0;
  bool is_pd = false;
};

/// is_pd holds iff ||S - S*|| <= tol ||S|| and the smallest eigenvalue of the
/// Hermitian part exceeds tol ||S|| (Frobenius norms).
PosdefResult posdef_check(const CMatrix& S, double tol);

CMatrix hermitian_part(const CMatrix& S);

/// Orthonormal rows W spanning the left null space of M at relative
/// threshold `rank_tol`: W is (p - r) x p with W M ~ 0.
CMatrix left_nullspace_basis(const CMatrix& M, double rank_tol);

double smallest_singular_value(const CMatrix& M);

/// Cholesky factor of the Hermitian part of a positive definite matrix. Used
/// for every S^{-1}, Q^{-1}, R^{-1} application so that no explicit inverse
/// of a possibly ill-conditioned matrix is ever formed by Gauss-Jordan.
class HermitianFactor {
 public:
  explicit HermitianFactor(const CMatrix& S);

  CMatrix solve(const CMatrix& B) const;
  CMatrix inverse() const;
  /// Reciprocal condition estimate in the 1-norm.
  double rcond() const { return rcond_; }
  const CMatrix& matrix() const { return herm_; }

 private:
  CMatrix herm_;
  Eigen::LLT<CMatrix> llt_;
  double rcond_ = 0.0;
};

/// Complex Schur form A = U T U*.
struct SchurForm {
  CMatrix U;
  CMatrix T;
};

SchurForm complex_schur(const CMatrix& A);

/// Reorders a Schur form so that the eigenvalues accepted by `select` lead
/// the diagonal. Returns the number of selected eigenvalues.
int reorder_schur(SchurForm& form,
                  const std::function<bool(Complex)>& select);

/// Orthonormal basis (n x k) of the A-invariant subspace belonging to the
/// eigenvalues accepted by `select`.
CMatrix invariant_subspace(const CMatrix& A,
                           const std::function<bool(Complex)>& select);

/// Eigenvalues of a general complex matrix (Schur diagonal).
CVector eigenvalues(const CMatrix& A);

}  // namespace linalg
}  // namespace gbdt
