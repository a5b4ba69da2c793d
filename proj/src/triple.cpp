#include "gbdt/triple.hpp"

#include <cmath>
#include <random>
#include <string>

namespace gbdt {

void SignatureJ::validate() const {
  if (m1 < 0 || m2 < 0 || m() <= 0) {
    throw ShapeError("signature requires m1, m2 >= 0 and m1 + m2 > 0, got (" +
                     std::to_string(m1) + ", " + std::to_string(m2) + ")");
  }
}

CMatrix SignatureJ::matrix() const {
  CMatrix j = CMatrix::Identity(m(), m());
  j.bottomRightCorner(m2, m2) *= -1.0;
  return j;
}

void GBDTTriple::validate_shapes() const {
  sig.validate();
  const Eigen::Index nn = A.rows();
  if (nn < 1 || A.cols() != nn) throw ShapeError("triple: A must be n x n");
  if (S0.rows() != nn || S0.cols() != nn) {
    throw ShapeError("triple: S0 must be " + std::to_string(nn) + "x" +
                     std::to_string(nn));
  }
  if (Pi0.rows() != nn || Pi0.cols() != sig.m()) {
    throw ShapeError("triple: Pi0 must be " + std::to_string(nn) + "x" +
                     std::to_string(sig.m()));
  }
  linalg::require_finite(A, "triple A");
  linalg::require_finite(S0, "triple S0");
  linalg::require_finite(Pi0, "triple Pi0");
}

double identity_residual(const CMatrix& A, const CMatrix& S, const CMatrix& Pi,
                         const SignatureJ& sig) {
  const CMatrix j = sig.matrix();
  return (A * S - S * A.adjoint() - kI * Pi * j * Pi.adjoint()).norm();
}

double identity_scale(const CMatrix& A, const CMatrix& S, const CMatrix& Pi) {
  return A.norm() * S.norm() + Pi.squaredNorm();
}

IdentityCheck verify_identity(const GBDTTriple& t) {
  t.validate_shapes();
  IdentityCheck out;
  out.residual = identity_residual(t.A, t.S0, t.Pi0, t.sig);
  out.bound = 1e-10 * identity_scale(t.A, t.S0, t.Pi0);
  out.ok = out.residual <= out.bound;
  return out;
}

bool is_invertible(const CMatrix& A) {
  return linalg::smallest_singular_value(A) > 1e-12 * A.norm();
}

GBDTTriple complete_S0(const CMatrix& A, const CMatrix& Pi0,
                       const SignatureJ& sig) {
  sig.validate();
  linalg::require_square(A, "complete_S0");
  if (Pi0.rows() != A.rows() || Pi0.cols() != sig.m()) {
    throw ShapeError("complete_S0: Pi0 must be n x m");
  }
  const CMatrix j = sig.matrix();
  const CMatrix rhs = kI * Pi0 * j * Pi0.adjoint();
  CMatrix S0 =
      linalg::hermitian_part(linalg::sylvester_solve(A, A.adjoint(), rhs));
  const auto pd = linalg::posdef_check(S0, 1e-10);
  if (!pd.is_pd) {
    throw NotPositiveDefiniteError(
        "complete_S0: S0 is not positive definite (min eigenvalue " +
            std::to_string(pd.min_eig) + ")",
        pd.min_eig);
  }
  return GBDTTriple{A, std::move(S0), Pi0, sig};
}

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform_(rng_);
  }
  CMatrix gaussian(Eigen::Index rows, Eigen::Index cols) {
    CMatrix M(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double re = normal();
        const double im = normal();
        M(r, c) = Complex(re, im) / std::sqrt(2.0);
      }
    }
    return M;
  }
  CMatrix unitary(Eigen::Index k) {
    if (k == 0) return CMatrix(0, 0);
    Eigen::HouseholderQR<CMatrix> qr(gaussian(k, k));
    return qr.householderQ() * CMatrix::Identity(k, k);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

CMatrix draw_A(Sampler& s, Eigen::Index n, SpectrumConstraint spectrum) {
  if (spectrum == SpectrumConstraint::kAny) {
    return s.gaussian(n, n) / std::sqrt(static_cast<double>(n));
  }
  CVector lambda(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = s.uniform(-1.0, 1.0);
    double im = s.uniform(0.25, 1.0);
    if (spectrum == SpectrumConstraint::kOffRealAxis && s.uniform(0, 1) < 0.5) {
      im = -im;
    }
    lambda(k) = Complex(re, im);
  }
  const CMatrix V = CMatrix::Identity(n, n) +
                    0.3 * s.gaussian(n, n) / std::sqrt(static_cast<double>(n));
  return V * lambda.asDiagonal() * V.inverse();
}

bool spectrum_ok(const CMatrix& A, SpectrumConstraint spectrum) {
  if (linalg::smallest_singular_value(A) <= 1e-3 * A.norm()) return false;
  if (spectrum == SpectrumConstraint::kAny) return true;
  const CVector ev = linalg::eigenvalues(A);
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (spectrum == SpectrumConstraint::kUpperHalfPlane && ev(k).imag() <= 0.0)
      return false;
  }
  return linalg::spectral_gap(A, A.adjoint()) > 0.1;
}

}  // namespace

GBDTTriple random_admissible(int n, const SignatureJ& sig, std::uint64_t seed,
                             const GeneratorOptions& options) {
  sig.validate();
  if (n < 1) throw ShapeError("random_admissible: n must be >= 1");
  Sampler s(seed);
  const CMatrix I = CMatrix::Identity(n, n);
  for (int draw = 0; draw < options.max_draws; ++draw) {
    const CMatrix B = s.gaussian(n, n);
    const CMatrix S0 = linalg::hermitian_part(B * B.adjoint() / n + 0.5 * I);
    const CMatrix A = draw_A(s, n, options.spectrum);
    // Keep the stream position independent of acceptance.
    const CMatrix mix1 = s.unitary(sig.m1);
    const CMatrix mix2 = s.unitary(sig.m2);
    if (!spectrum_ok(A, options.spectrum)) continue;

    const CMatrix K =
        linalg::hermitian_part(-kI * (A * S0 - S0 * A.adjoint()));
    Eigen::SelfAdjointEigenSolver<CMatrix> es(K);
    const auto& ev = es.eigenvalues();
    const double cutoff = 1e-13 * K.norm();
    int p = 0;
    int q = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (ev(k) > cutoff) ++p;
      if (ev(k) < -cutoff) ++q;
    }
    if (p > sig.m1 || q > sig.m2) continue;

    CMatrix theta1 = CMatrix::Zero(n, sig.m1);
    CMatrix theta2 = CMatrix::Zero(n, sig.m2);
    int c1 = 0;
    int c2 = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (ev(k) > cutoff) {
        theta1.col(c1++) = std::sqrt(ev(k)) * es.eigenvectors().col(k);
      } else if (ev(k) < -cutoff) {
        theta2.col(c2++) = std::sqrt(-ev(k)) * es.eigenvectors().col(k);
      }
    }
    GBDTTriple t;
    t.A = A;
    t.S0 = S0;
    t.sig = sig;
    t.Pi0.resize(n, sig.m());
    t.Pi0.leftCols(sig.m1) = theta1 * mix1;
    t.Pi0.rightCols(sig.m2) = theta2 * mix2;
    if (verify_identity(t).ok && linalg::posdef_check(S0, 1e-10).is_pd) {
      return t;
    }
  }
  throw GeneratorExhausted("random_admissible: no admissible triple for n=" +
                           std::to_string(n) + ", m1=" +
                           std::to_string(sig.m1) + ", m2=" +
                           std::to_string(sig.m2) + " within " +
                           std::to_string(options.max_draws) + " draws");
}

}  // namespace gbdt
