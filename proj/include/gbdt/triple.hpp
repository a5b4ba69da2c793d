#pragma once

#include <cstdint>

#include "gbdt/errors.hpp"
#include "gbdt/linalg.hpp"

namespace gbdt {

/// Signature matrix j = diag(I_{m1}, -I_{m2}).
struct SignatureJ {
  int m1 = 0;
  int m2 = 0;

  int m() const { return m1 + m2; }
  /// Throws ShapeError unless m1, m2 >= 0 and m > 0.
  void validate() const;
  CMatrix matrix() const;
};

/// Parameter triple {A, S(0), Pi(0)} seeding a transformation. A and S0 are
/// n x n, Pi0 is n x m.
struct GBDTTriple {
  CMatrix A;
  CMatrix S0;
  CMatrix Pi0;
  SignatureJ sig;

  Eigen::Index n() const { return A.rows(); }
  /// Throws ShapeError on inconsistent dimensions or NonFiniteError.
  void validate_shapes() const;
};

/// Frobenius norm of A S - S A* - i Pi j Pi*.
double identity_residual(const CMatrix& A, const CMatrix& S, const CMatrix& Pi,
                         const SignatureJ& sig);
/// ||A|| ||S|| + ||Pi||^2, the scale the identity residual is measured in.
double identity_scale(const CMatrix& A, const CMatrix& S, const CMatrix& Pi);

struct IdentityCheck {
  double residual = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/// Checks A S0 - S0 A* = i Pi0 j Pi0* with bound 1e-10 * identity_scale.
IdentityCheck verify_identity(const GBDTTriple& t);

/// Smallest singular value of A exceeds 1e-12 ||A||.
bool is_invertible(const CMatrix& A);

/// Solves A S0 - S0 A* = i Pi0 j Pi0* for S0 and keeps the triple only when
/// the symmetrized S0 is positive definite.
GBDTTriple complete_S0(const CMatrix& A, const CMatrix& Pi0,
                       const SignatureJ& sig);

enum class SpectrumConstraint {
  kAny,             // Gaussian A, only det A != 0 is enforced
  kOffRealAxis,     // |Im lambda| bounded away from zero, either sign
  kUpperHalfPlane,  // Im lambda > 0 for every eigenvalue
};

struct GeneratorOptions {
  SpectrumConstraint spectrum = SpectrumConstraint::kAny;
  int max_draws = 64;
};

class GeneratorExhausted : public Error {
 public:
  using Error::Error;
};

/// Deterministic generator of admissible triples. Each draw picks S0 > 0 and
/// an invertible A, forms K = -i (A S0 - S0 A*) and, when the inertia of K
/// fits the signature, realizes Pi0 from the scaled eigenvectors of K so the
/// identity holds by construction. Incompatible draws are retried.
GBDTTriple random_admissible(int n, const SignatureJ& sig, std::uint64_t seed,
                             const GeneratorOptions& options = {});

}  // namespace gbdt
