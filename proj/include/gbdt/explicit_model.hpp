#pragma once

// Closed-form transformation of the trivial initial Hamiltonian H(x) = I_m.
//
// With Pi(0) = [theta1 theta2] and C1, C2 solving A C_k - C_k A* =
// i theta_k theta_k*, everything is explicit:
//
//   Pi(x) = [e^{-ixA} theta1, e^{ixA} theta2]
//   S(x)  = S(0) - C1 + C2 + e^{-ixA} C1 e^{ixA*} - e^{ixA} C2 e^{-ixA*}
//   u(x)  = w_A(x, 0) u_right
//   Y(x,t) = u* j Pi* S^{-1} e^{itA},  Hcal(x) = u^{-1} u^{-*}.
//
// S(x) typically grows exponentially, so quantities involving S^{-1} are
// evaluated through N(x) = M S M*, where M commutes with A and acts as
// e^{ixA} on the upper and e^{-ixA} on the lower half-plane spectral
// subspace of A. For spectrum in one half-plane N is Q(x) = e^{ixA} S
// e^{-ixA*} or R(x) = e^{-ixA} S e^{ixA*}.

#include <vector>

#include "gbdt/linalg.hpp"
#include "gbdt/solution.hpp"
#include "gbdt/triple.hpp"

namespace gbdt {

struct QRPair {
  CMatrix Q;
  CMatrix R;
};

struct Inverses {
  CMatrix Qinv;
  CMatrix Rinv;
  CMatrix Sinv;
};

struct KappaLimits {
  CMatrix kQ;
  CMatrix kR;
  CMatrix kS;
  bool q_converged = false;
  bool r_converged = false;
  bool s_converged = false;
  /// Frobenius change of each inverse across [x_max / 2, x_max].
  double q_tail = 0.0;
  double r_tail = 0.0;
  double s_tail = 0.0;
  std::vector<double> schedule;
};

/// theta2* e^{-2ixA*} Q^{-1} (m2 x n) and theta1* e^{2ixA*} R^{-1} (m1 x n),
/// the off-diagonal drivers of w_A(x, 0).
struct DecayTerms {
  CMatrix from_q;
  CMatrix from_r;
};

struct Eigenspaces {
  CMatrix Zplus;   // m x m1
  CMatrix Zminus;  // m x m2
};

struct SimilarityWitness {
  CMatrix T;            // (j u j)^{-1}
  CMatrix T_adjoint;    // u*, equal to T by j-unitarity
  double deviation = 0.0;  // ||T - u*||
  double residual = 0.0;   // ||j Hcal - T j T^{-1}||
};

class ExplicitModel {
 public:
  /// Solves for C1, sets C2 = C1 - S(0) and verifies C2's own identity.
  /// Throws SingularMatrixError if A is singular, SpectralSeparationError if
  /// sigma(A) meets sigma(A*), Error if C2 is inconsistent.
  static ExplicitModel build(const GBDTTriple& t);

  const GBDTTriple& triple() const { return triple_; }
  const CMatrix& theta1() const { return theta1_; }
  const CMatrix& theta2() const { return theta2_; }
  const CMatrix& C1() const { return C1_; }
  const CMatrix& C2() const { return C2_; }
  const CMatrix& u_right() const { return u_right_; }
  const CMatrix& j() const { return j_; }
  int m1() const { return triple_.sig.m1; }
  int m2() const { return triple_.sig.m2; }
  int m() const { return triple_.sig.m(); }
  Eigen::Index n() const { return triple_.n(); }

  CMatrix pi_at(double x) const;
  /// Closed form for S(x), symmetrized; throws NotPositiveDefiniteError.
  CMatrix s_at(double x) const;
  /// Throws SingularMatrixError when sigma_min(A - lambda I) < 1e-10 ||A||.
  CMatrix wa_at(double x, Complex lambda) const;
  CMatrix u_at(double x) const;
  CMatrix y_at(double x, double t) const;
  CMatrix hcal_at(double x) const;
  CMatrix pi_star_s_inv(double x) const;
  CMatrix hcal_y_left(double x) const;
  /// Reciprocal condition estimate of the factor of N(x) used at x.
  double rcond_at(double x) const;

  SolutionField field(const std::vector<double>& xs,
                      const std::vector<double>& ts) const;

  QRPair qr_at(double x) const;
  Inverses inverses_at(double x) const;
  DecayTerms decay_terms(double x) const;

  /// Evaluates the inverses on x_k = x_max (1 - 2^{-k}), k = 0..20.
  KappaLimits kappa_limits(double x_max, double tol) const;
  CMatrix wa_limit(const CMatrix& kQ, const CMatrix& kR) const;
  /// Leading-order form of Y with the two exponents e^{i(t+x)A}, e^{i(t-x)A}.
  CMatrix y_asymptotic(double x, double t, const CMatrix& kQ,
                       const CMatrix& kR) const;
  /// Single-exponent variant e^{i(x+t)A}, suited to sigma(A) in the upper
  /// half-plane.
  CMatrix y_asymptotic_single(double x, double t, const CMatrix& kQ,
                              const CMatrix& kR) const;

  Eigenspaces eigenspaces(double x) const;
  SimilarityWitness similarity_T(double x) const;

 private:
  struct Frame;
  ExplicitModel() = default;
  Frame frame_at(double x) const;
  CMatrix wa_from_frame(const Frame& f, Complex lambda) const;
  void split_spectrum();
  /// V diag(e^{a A_up}, e^{b A_lo}) V^{-1}.
  CMatrix split_exp(Complex a, Complex b) const;
  /// M(x) e^{itA} for the frame at x.
  CMatrix frame_propagator(const Frame& f, double t) const;
  CMatrix leading_factor(const CMatrix& kQ, const CMatrix& kR) const;

  GBDTTriple triple_;
  CMatrix theta1_;
  CMatrix theta2_;
  CMatrix C1_;
  CMatrix C2_;
  CMatrix D0_;  // S(0) - C1 + C2, zero up to roundoff
  CMatrix u_right_;
  CMatrix j_;
  Eigen::PartialPivLU<CMatrix> A_lu_;
  // A = V diag(A_up, A_lo) V^{-1}, sigma(A_up) in Im > 0, sigma(A_lo) in
  // Im < 0; unused when split_ is false.
  bool split_ = false;
  CMatrix V_;
  CMatrix Vinv_;
  CMatrix A_up_;
  CMatrix A_lo_;
};

/// SolutionSource view of an ExplicitModel (H = I).
class ExplicitSource : public SolutionSource {
 public:
  explicit ExplicitSource(const ExplicitModel& model) : model_(model) {}

  std::string engine() const override { return "explicit"; }
  const GBDTTriple& triple() const override { return model_.triple(); }
  CMatrix pi(double x) const override { return model_.pi_at(x); }
  CMatrix s(double x) const override { return model_.s_at(x); }
  CMatrix s_inv(double x) const override {
    return model_.inverses_at(x).Sinv;
  }
  CMatrix u(double x) const override { return model_.u_at(x); }
  CMatrix h0(double) const override {
    return CMatrix::Identity(model_.m(), model_.m());
  }
  CMatrix pi_star_s_inv(double x) const override {
    return model_.pi_star_s_inv(x);
  }
  CMatrix y(double x, double t) const override { return model_.y_at(x, t); }
  CMatrix hcal(double x) const override { return model_.hcal_at(x); }
  CMatrix hcal_y_left(double x) const override {
    return model_.hcal_y_left(x);
  }

 private:
  const ExplicitModel& model_;
};

}  // namespace gbdt
