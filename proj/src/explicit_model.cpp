#include "gbdt/explicit_model.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "gbdt/errors.hpp"

namespace gbdt {

namespace {

void require_finite_x(double x, const char* where) {
  if (!std::isfinite(x)) throw Error(std::string(where) + ": x not finite");
}

CMatrix block_diag(const CMatrix& a, const CMatrix& b) {
  CMatrix out = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

CMatrix stack_rows(const CMatrix& top, const CMatrix& bottom) {
  CMatrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

CMatrix join_cols(const CMatrix& left, const CMatrix& right) {
  CMatrix out(left.rows(), left.cols() + right.cols());
  out.leftCols(left.cols()) = left;
  out.rightCols(right.cols()) = right;
  return out;
}

}  // namespace

// Evaluation frame at one x. With M(x) commuting with A and equal to
// e^{ixA} on the upper half-plane spectral subspace of A and e^{-ixA} on the
// lower one, N = M S M* and
//   Pi* S^{-1} = gain M,   M Pi = right,
// where Xp = M e^{-ixA}, Xm = M e^{ixA}, gain = [(Xp theta1)* N^{-1};
// (Xm theta2)* N^{-1}] and right = [Xp theta1, Xm theta2]. Every exponential
// entering M, Xp, Xm and N is non-growing. When A has spectrum on the real
// axis the split is unavailable and M = I.
struct ExplicitModel::Frame {
  double x = 0.0;
  CMatrix M;
  CMatrix Xp;
  CMatrix Xm;
  CMatrix inner;  // N(x)
  linalg::HermitianFactor factor;
  CMatrix gain;   // m x n
  CMatrix right;  // n x m

  Frame(double x_, CMatrix m, CMatrix xp, CMatrix xm, CMatrix in)
      : x(x_),
        M(std::move(m)),
        Xp(std::move(xp)),
        Xm(std::move(xm)),
        inner(std::move(in)),
        factor(inner) {}
};

ExplicitModel ExplicitModel::build(const GBDTTriple& t) {
  t.validate_shapes();
  if (!is_invertible(t.A)) {
    throw SingularMatrixError("build_model: A is singular");
  }
  const auto pd = linalg::posdef_check(t.S0, 1e-10);
  if (!pd.is_pd) {
    throw NotPositiveDefiniteError("build_model: S0 is not positive definite",
                                   pd.min_eig);
  }
  ExplicitModel model;
  model.triple_ = t;
  model.theta1_ = t.Pi0.leftCols(t.sig.m1);
  model.theta2_ = t.Pi0.rightCols(t.sig.m2);
  model.j_ = t.sig.matrix();
  model.A_lu_.compute(t.A);

  const CMatrix rhs1 = kI * model.theta1_ * model.theta1_.adjoint();
  if (rhs1.norm() == 0.0) {
    model.C1_ = CMatrix::Zero(t.n(), t.n());
  } else {
    model.C1_ = linalg::sylvester_solve(t.A, t.A.adjoint(), rhs1);
  }
  model.C2_ = model.C1_ - t.S0;
  model.D0_ = t.S0 - model.C1_ + model.C2_;

  const CMatrix rhs2 = kI * model.theta2_ * model.theta2_.adjoint();
  const double c2_residual =
      linalg::sylvester_residual(t.A, t.A.adjoint(), rhs2, model.C2_);
  const double scale = t.A.norm() * (model.C1_.norm() + t.S0.norm()) +
                       t.Pi0.squaredNorm();
  if (c2_residual > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "build_model: C2 = C1 - S0 violates its identity (residual "
        << c2_residual << ", scale " << scale << "); the triple is broken";
    throw Error(msg.str());
  }

  const linalg::HermitianFactor s0(t.S0);
  const CMatrix w = t.A.adjoint().partialPivLu().solve(s0.solve(t.Pi0));
  model.u_right_ = CMatrix::Identity(t.sig.m(), t.sig.m()) +
                   kI * model.j_ * t.Pi0.adjoint() * w;
  model.split_spectrum();
  return model;
}

void ExplicitModel::split_spectrum() {
  const CMatrix& A = triple_.A;
  const Eigen::Index n = A.rows();
  const CVector ev = linalg::eigenvalues(A);
  const double floor = 1e-8 * std::max(A.norm(), 1.0);
  split_ = (ev.imag().cwiseAbs().array() > floor).all();
  if (!split_) return;
  linalg::SchurForm form = linalg::complex_schur(A);
  const Eigen::Index k =
      linalg::reorder_schur(form, [](Complex z) { return z.imag() > 0.0; });
  const CMatrix T12 = form.T.topRightCorner(k, n - k);
  A_up_ = form.T.topLeftCorner(k, k);
  A_lo_ = form.T.bottomRightCorner(n - k, n - k);
  CMatrix W = CMatrix::Identity(n, n);
  CMatrix Winv = CMatrix::Identity(n, n);
  if (k > 0 && k < n) {
    const CMatrix Y = linalg::sylvester_solve(A_up_, A_lo_, -T12);
    W.topRightCorner(k, n - k) = Y;
    Winv.topRightCorner(k, n - k) = -Y;
  }
  V_ = form.U * W;
  Vinv_ = Winv * form.U.adjoint();
}

CMatrix ExplicitModel::split_exp(Complex a, Complex b) const {
  const Eigen::Index k = A_up_.rows();
  const Eigen::Index n = triple_.n();
  CMatrix D = CMatrix::Zero(n, n);
  if (k > 0) D.topLeftCorner(k, k) = linalg::mat_exp(a * A_up_);
  if (k < n) D.bottomRightCorner(n - k, n - k) = linalg::mat_exp(b * A_lo_);
  return V_ * D * Vinv_;
}

CMatrix ExplicitModel::frame_propagator(const Frame& f, double t) const {
  if (split_) return split_exp(kI * (f.x + t), kI * (t - f.x));
  return linalg::mat_exp(kI * t * triple_.A);
}

ExplicitModel::Frame ExplicitModel::frame_at(double x) const {
  require_finite_x(x, "explicit engine");
  CMatrix M, Xp, Xm;
  if (split_) {
    M = split_exp(kI * x, -kI * x);
    Xp = split_exp(0.0, -2.0 * kI * x);
    Xm = split_exp(2.0 * kI * x, 0.0);
  } else {
    M = CMatrix::Identity(n(), n());
    Xp = linalg::mat_exp(-kI * x * triple_.A);
    Xm = linalg::mat_exp(kI * x * triple_.A);
  }
  CMatrix N = linalg::hermitian_part(M * D0_ * M.adjoint() +
                                     Xp * C1_ * Xp.adjoint() -
                                     Xm * C2_ * Xm.adjoint());
  Frame f(x, std::move(M), std::move(Xp), std::move(Xm), std::move(N));
  const CMatrix r1 = f.Xp * theta1_;
  const CMatrix r2 = f.Xm * theta2_;
  f.gain = stack_rows(f.factor.solve(r1).adjoint(),
                      f.factor.solve(r2).adjoint());
  f.right = join_cols(r1, r2);
  return f;
}

CMatrix ExplicitModel::wa_from_frame(const Frame& f, Complex lambda) const {
  CMatrix X;
  if (lambda == Complex(0.0)) {
    X = A_lu_.solve(f.right);
  } else {
    const CMatrix shifted =
        triple_.A - lambda * CMatrix::Identity(n(), n());
    if (linalg::smallest_singular_value(shifted) < 1e-10 * triple_.A.norm()) {
      throw SingularMatrixError("wa_at: lambda too close to the spectrum of A");
    }
    X = shifted.partialPivLu().solve(f.right);
  }
  return CMatrix::Identity(m(), m()) - kI * j_ * f.gain * X;
}

CMatrix ExplicitModel::pi_at(double x) const {
  require_finite_x(x, "pi_at");
  const CMatrix& A = triple_.A;
  return join_cols(linalg::mat_exp(-kI * x * A) * theta1_,
                   linalg::mat_exp(kI * x * A) * theta2_);
}

CMatrix ExplicitModel::s_at(double x) const {
  require_finite_x(x, "s_at");
  const CMatrix& A = triple_.A;
  const CMatrix Ep = linalg::mat_exp(kI * x * A);
  const CMatrix Em = linalg::mat_exp(-kI * x * A);
  CMatrix S = linalg::hermitian_part(triple_.S0 - C1_ + C2_ +
                                     Em * C1_ * Em.adjoint() -
                                     Ep * C2_ * Ep.adjoint());
  try {
    linalg::HermitianFactor check(S);
  } catch (const NotPositiveDefiniteError& e) {
    std::ostringstream msg;
    msg << "s_at(" << x << "): S(x) lost positivity (min eigenvalue "
        << e.min_eig() << ")";
    throw NotPositiveDefiniteError(msg.str(), e.min_eig());
  }
  return S;
}

CMatrix ExplicitModel::wa_at(double x, Complex lambda) const {
  return wa_from_frame(frame_at(x), lambda);
}

CMatrix ExplicitModel::u_at(double x) const {
  return wa_from_frame(frame_at(x), 0.0) * u_right_;
}

CMatrix ExplicitModel::pi_star_s_inv(double x) const {
  const Frame f = frame_at(x);
  return f.gain * f.M;
}

CMatrix ExplicitModel::y_at(double x, double t) const {
  const Frame f = frame_at(x);
  const CMatrix u = wa_from_frame(f, 0.0) * u_right_;
  return u.adjoint() * j_ * f.gain * frame_propagator(f, t);
}

CMatrix ExplicitModel::hcal_at(double x) const {
  const CMatrix uinv = u_at(x).partialPivLu().inverse();
  return linalg::hermitian_part(uinv * uinv.adjoint());
}

CMatrix ExplicitModel::hcal_y_left(double x) const {
  const Frame f = frame_at(x);
  const CMatrix u = wa_from_frame(f, 0.0) * u_right_;
  return j_ * u.adjoint() * f.gain * f.M;
}

double ExplicitModel::rcond_at(double x) const {
  return frame_at(x).factor.rcond();
}

SolutionField ExplicitModel::field(const std::vector<double>& xs,
                                   const std::vector<double>& ts) const {
  validate_grid(xs, "x", true);
  validate_grid(ts, "t", false);
  SolutionField out;
  out.xs = xs;
  out.ts = ts;
  out.Y.reserve(xs.size() * ts.size());
  out.Hcal.reserve(xs.size());
  for (double x : xs) {
    const Frame f = frame_at(x);
    const double cond = 1.0 / f.factor.rcond();
    out.max_condition = std::max(out.max_condition, cond);
    if (cond > 1e12) {
      std::ostringstream msg;
      msg << "x=" << x << ": condition estimate " << cond << " exceeds 1e12";
      out.warnings.push_back(msg.str());
    }
    const CMatrix u = wa_from_frame(f, 0.0) * u_right_;
    const CMatrix uinv = u.partialPivLu().inverse();
    out.Hcal.push_back(linalg::hermitian_part(uinv * uinv.adjoint()));
    const CMatrix left = u.adjoint() * j_ * f.gain;
    for (double t : ts) out.Y.push_back(left * frame_propagator(f, t));
  }
  return out;
}

QRPair ExplicitModel::qr_at(double x) const {
  require_finite_x(x, "qr_at");
  const CMatrix& A = triple_.A;
  const CMatrix Ep = linalg::mat_exp(kI * x * A);
  const CMatrix Em = linalg::mat_exp(-kI * x * A);
  const CMatrix up = linalg::mat_exp(2.0 * kI * x * A);
  const CMatrix down = linalg::mat_exp(-2.0 * kI * x * A);
  QRPair out;
  out.Q = linalg::hermitian_part(C1_ + Ep * D0_ * Ep.adjoint() -
                                 up * C2_ * up.adjoint());
  out.R = linalg::hermitian_part(down * C1_ * down.adjoint() +
                                 Em * D0_ * Em.adjoint() - C2_);
  return out;
}

Inverses ExplicitModel::inverses_at(double x) const {
  const Frame f = frame_at(x);
  const CMatrix Ninv = f.factor.inverse();
  Inverses out;
  out.Qinv = linalg::hermitian_part(f.Xp.adjoint() * Ninv * f.Xp);
  out.Rinv = linalg::hermitian_part(f.Xm.adjoint() * Ninv * f.Xm);
  out.Sinv = linalg::hermitian_part(f.M.adjoint() * Ninv * f.M);
  return out;
}

DecayTerms ExplicitModel::decay_terms(double x) const {
  const Frame f = frame_at(x);
  DecayTerms out;
  out.from_q = f.factor.solve(f.Xm * theta2_).adjoint() * f.Xp;
  out.from_r = f.factor.solve(f.Xp * theta1_).adjoint() * f.Xm;
  return out;
}

KappaLimits ExplicitModel::kappa_limits(double x_max, double tol) const {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw Error("kappa_limits: x_max must be positive");
  }
  if (!(tol > 0.0)) throw Error("kappa_limits: tol must be positive");
  constexpr int kLevels = 20;
  KappaLimits out;
  Inverses half;
  for (int k = 0; k <= kLevels; ++k) {
    const double x = x_max * (1.0 - std::ldexp(1.0, -k));
    out.schedule.push_back(x);
    Inverses inv = inverses_at(x);
    if (k == 1) half = inv;
    if (k == kLevels) {
      out.kQ = std::move(inv.Qinv);
      out.kR = std::move(inv.Rinv);
      out.kS = std::move(inv.Sinv);
    }
  }
  out.q_tail = (out.kQ - half.Qinv).norm();
  out.r_tail = (out.kR - half.Rinv).norm();
  out.s_tail = (out.kS - half.Sinv).norm();
  out.q_converged = out.q_tail < tol;
  out.r_converged = out.r_tail < tol;
  out.s_converged = out.s_tail < tol;
  return out;
}

CMatrix ExplicitModel::wa_limit(const CMatrix& kQ, const CMatrix& kR) const {
  const CMatrix top = CMatrix::Identity(m1(), m1()) -
                      kI * theta1_.adjoint() * kQ * A_lu_.solve(theta1_);
  const CMatrix bottom = CMatrix::Identity(m2(), m2()) +
                         kI * theta2_.adjoint() * kR * A_lu_.solve(theta2_);
  return block_diag(top, bottom);
}

CMatrix ExplicitModel::leading_factor(const CMatrix& kQ,
                                      const CMatrix& kR) const {
  const auto adj_lu = triple_.A.adjoint().partialPivLu();
  const CMatrix top = CMatrix::Identity(m1(), m1()) +
                      kI * theta1_.adjoint() * adj_lu.solve(kQ * theta1_);
  const CMatrix bottom = CMatrix::Identity(m2(), m2()) -
                         kI * theta2_.adjoint() * adj_lu.solve(kR * theta2_);
  return j_ * wa_at(0.0, 0.0) * block_diag(top, bottom);
}

CMatrix ExplicitModel::y_asymptotic(double x, double t, const CMatrix& kQ,
                                    const CMatrix& kR) const {
  const CMatrix& A = triple_.A;
  const CMatrix second =
      stack_rows(theta1_.adjoint() * kQ * linalg::mat_exp(kI * (t + x) * A),
                 theta2_.adjoint() * kR * linalg::mat_exp(kI * (t - x) * A));
  return leading_factor(kQ, kR) * second;
}

CMatrix ExplicitModel::y_asymptotic_single(double x, double t,
                                           const CMatrix& kQ,
                                           const CMatrix& kR) const {
  const CMatrix second =
      stack_rows(theta1_.adjoint() * kQ, CMatrix::Zero(m2(), n())) *
      linalg::mat_exp(kI * (x + t) * triple_.A);
  return leading_factor(kQ, kR) * second;
}

Eigenspaces ExplicitModel::eigenspaces(double x) const {
  const CMatrix ustar = u_at(x).adjoint();
  return {2.0 * ustar.leftCols(m1()), 2.0 * ustar.rightCols(m2())};
}

SimilarityWitness ExplicitModel::similarity_T(double x) const {
  const CMatrix u = u_at(x);
  const CMatrix juj = j_ * u * j_;
  SimilarityWitness out;
  out.T = juj.partialPivLu().inverse();
  out.T_adjoint = u.adjoint();
  out.deviation = (out.T - out.T_adjoint).norm();
  const CMatrix uinv = u.partialPivLu().inverse();
  const CMatrix hcal = linalg::hermitian_part(uinv * uinv.adjoint());
  out.residual = (j_ * hcal - out.T * j_ * juj).norm();
  return out;
}

}  // namespace gbdt
