#include "gbdt/general_engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gbdt/errors.hpp"

namespace gbdt {

namespace {

struct Derivative {
  CMatrix dPi;
  CMatrix dS;
  CMatrix du;
};

Derivative rhs(const GBDTTriple& t, const CMatrix& j, const TrajectoryState& s,
               const CMatrix& H) {
  Derivative d;
  d.dPi = -kI * t.A * s.Pi * j * H;
  d.dS = s.Pi * j * H * j * s.Pi.adjoint();
  d.du = -q0_tilde(s.Pi, s.S, H, t.sig) * s.u;
  return d;
}

TrajectoryState axpy(const TrajectoryState& s, double h, const Derivative& d) {
  return {s.Pi + h * d.dPi, s.S + h * d.dS, s.u + h * d.du};
}

TrajectoryState rk4_step(const GBDTTriple& t, const CMatrix& j,
                         const HamiltonianField& H, double x, double h,
                         const TrajectoryState& s) {
  const CMatrix H0 = H(x);
  const CMatrix Hm = H(x + 0.5 * h);
  const CMatrix H1 = H(x + h);
  const Derivative k1 = rhs(t, j, s, H0);
  const Derivative k2 = rhs(t, j, axpy(s, 0.5 * h, k1), Hm);
  const Derivative k3 = rhs(t, j, axpy(s, 0.5 * h, k2), Hm);
  const Derivative k4 = rhs(t, j, axpy(s, h, k3), H1);
  TrajectoryState out;
  out.Pi = s.Pi + h / 6.0 * (k1.dPi + 2.0 * k2.dPi + 2.0 * k3.dPi + k4.dPi);
  out.S = linalg::hermitian_part(
      s.S + h / 6.0 * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS));
  out.u = s.u + h / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
  return out;
}

}  // namespace

CMatrix q0_tilde(const CMatrix& Pi, const CMatrix& S, const CMatrix& H,
                 const SignatureJ& sig) {
  const CMatrix j = sig.matrix();
  const linalg::HermitianFactor f(S);
  const CMatrix P = Pi.adjoint() * f.solve(Pi);
  return j * P * j * H - j * H * j * P;
}

std::size_t Trajectory::node_index(double x) const {
  if (xs.empty()) throw InputError("trajectory: empty");
  const double k = std::round(x / step);
  if (k < 0 || k >= static_cast<double>(xs.size()) ||
      std::abs(x - xs[static_cast<std::size_t>(k)]) > 1e-9 * step) {
    std::ostringstream msg;
    msg << "trajectory: x = " << x << " is not a node";
    throw InputError(msg.str());
  }
  return static_cast<std::size_t>(k);
}

Trajectory integrate(const GBDTTriple& t, const HamiltonianField& H, double a,
                     double step) {
  t.validate_shapes();
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InputError("integrate: a must be positive and finite");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InputError("integrate: step must be positive and finite");
  }
  const double ratio = a / step;
  const double intervals = std::round(ratio);
  if (std::abs(ratio - intervals) > 1e-9 * ratio) {
    throw InputError("integrate: step does not divide a");
  }
  if (intervals < 8) {
    throw InputError("integrate: fewer than 8 steps on [0, a]");
  }
  if (H.dim() != t.sig.m()) {
    throw InputError("integrate: H dimension does not match m");
  }
  const CMatrix j = t.sig.matrix();
  const auto n_int = static_cast<std::size_t>(intervals);

  Trajectory tr;
  tr.triple = t;
  tr.step = a / intervals;
  tr.a = a;
  tr.xs.reserve(n_int + 1);
  tr.states.reserve(n_int + 1);

  TrajectoryState s{t.Pi0, linalg::hermitian_part(t.S0),
                    CMatrix::Identity(t.sig.m(), t.sig.m())};
  for (std::size_t k = 0; k <= n_int; ++k) {
    const double x = k == n_int ? a : static_cast<double>(k) * tr.step;
    try {
      linalg::HermitianFactor guard(s.S);
    } catch (const NotPositiveDefiniteError& e) {
      std::ostringstream msg;
      msg << "S lost positivity at x = " << x << " (min eigenvalue "
          << e.min_eig() << ")";
      tr.complete = false;
      tr.diagnostic = msg.str();
      return tr;
    }
    tr.xs.push_back(x);
    tr.states.push_back(s);
    tr.H.push_back(H(x));
    if (k == n_int) break;
    try {
      s = rk4_step(t, j, H, x, tr.step, s);
    } catch (const NotPositiveDefiniteError& e) {
      std::ostringstream msg;
      msg << "S lost positivity inside step from x = " << x
          << " (min eigenvalue " << e.min_eig() << ")";
      tr.complete = false;
      tr.diagnostic = msg.str();
      return tr;
    }
    if (!(s.Pi.allFinite() && s.S.allFinite() && s.u.allFinite())) {
      std::ostringstream msg;
      msg << "non-finite state after step from x = " << x;
      tr.complete = false;
      tr.diagnostic = msg.str();
      return tr;
    }
  }
  return tr;
}

CMatrix y_general(const Trajectory& tr, std::size_t k, double t) {
  const auto& s = tr.states.at(k);
  const CMatrix j = tr.triple.sig.matrix();
  const linalg::HermitianFactor f(s.S);
  return s.u.adjoint() * tr.H.at(k) * j * f.solve(s.Pi).adjoint() *
         linalg::mat_exp(kI * t * tr.triple.A);
}

CMatrix hcal_general(const Trajectory& tr, std::size_t k) {
  const auto& s = tr.states.at(k);
  const CMatrix uinv = s.u.partialPivLu().inverse();
  const linalg::HermitianFactor hf(tr.H.at(k));
  return linalg::hermitian_part(uinv * hf.solve(uinv.adjoint()));
}

CMatrix hcal_y_left_general(const Trajectory& tr, std::size_t k) {
  const auto& s = tr.states.at(k);
  const CMatrix j = tr.triple.sig.matrix();
  const linalg::HermitianFactor f(s.S);
  return s.u.partialPivLu().solve(j * f.solve(s.Pi).adjoint());
}

Diagonalization diagonalize_jhinv(const CMatrix& H, const SignatureJ& sig) {
  const CMatrix jhinv = sig.matrix() * linalg::HermitianFactor(H).inverse();
  Eigen::ComplexEigenSolver<CMatrix> es(jhinv);
  if (es.info() != Eigen::Success) {
    throw Error("diagonalize: eigendecomposition did not converge");
  }
  Diagonalization d{es.eigenvectors(), es.eigenvalues()};
  Eigen::JacobiSVD<CMatrix> svd(d.T);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0
                          ? sv(0) / sv(sv.size() - 1)
                          : std::numeric_limits<double>::infinity();
  if (cond > 1e8) {
    std::ostringstream msg;
    msg << "diagonalize: eigenvector condition " << cond << " exceeds 1e8";
    throw Error(msg.str());
  }
  return d;
}

HcalSimilarity hcal_similarity(const Trajectory& tr, std::size_t k,
                               const std::optional<Diagonalization>& diag) {
  const SignatureJ& sig = tr.triple.sig;
  const CMatrix j = sig.matrix();
  const CMatrix& H = tr.H.at(k);
  const Diagonalization d = diag ? *diag : diagonalize_jhinv(H, sig);
  const CMatrix Hinv = linalg::HermitianFactor(H).inverse();
  const auto T_lu = d.T.partialPivLu();
  HcalSimilarity out;
  out.factorization_residual =
      (j * Hinv - d.T * d.D.asDiagonal() * T_lu.inverse()).norm();
  if (out.factorization_residual > 1e-9 * Hinv.norm()) {
    std::ostringstream msg;
    msg << "hcal_similarity: supplied factorization residual "
        << out.factorization_residual << " exceeds 1e-9 ||H^{-1}||";
    throw Error(msg.str());
  }
  const CMatrix& u = tr.states.at(k).u;
  out.Hcal = hcal_general(tr, k);
  out.Tcal = (j * u * j).partialPivLu().solve(d.T);
  out.residual = (j * out.Hcal - out.Tcal * d.D.asDiagonal() *
                                     out.Tcal.partialPivLu().inverse())
                     .norm();
  return out;
}

TrajectorySource::TrajectorySource(const Trajectory& tr,
                                   const HamiltonianField& H)
    : tr_(tr), H_(H) {
  if (tr.xs.empty()) throw InputError("trajectory source: empty trajectory");
}

TrajectoryState TrajectorySource::state_at(double x) const {
  const double last = tr_.xs.back();
  if (!(x >= 0.0) || x > last * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "trajectory source: x = " << x << " outside [0, " << last << "]";
    throw InputError(msg.str());
  }
  auto k = static_cast<std::size_t>(std::floor(x / tr_.step));
  if (k >= tr_.xs.size()) k = tr_.xs.size() - 1;
  if (k > 0 && tr_.xs[k] > x) --k;
  const double h = x - tr_.xs[k];
  if (h <= 1e-14 * std::max(1.0, x)) return tr_.states[k];
  return rk4_step(tr_.triple, tr_.triple.sig.matrix(), H_, tr_.xs[k], h,
                  tr_.states[k]);
}

CMatrix TrajectorySource::s_inv(double x) const {
  return linalg::HermitianFactor(state_at(x).S).inverse();
}

CMatrix TrajectorySource::pi_star_s_inv(double x) const {
  const auto s = state_at(x);
  return linalg::HermitianFactor(s.S).solve(s.Pi).adjoint();
}

CMatrix TrajectorySource::y(double x, double t) const {
  const auto s = state_at(x);
  const CMatrix j = tr_.triple.sig.matrix();
  return s.u.adjoint() * H_(x) * j *
         linalg::HermitianFactor(s.S).solve(s.Pi).adjoint() *
         linalg::mat_exp(kI * t * tr_.triple.A);
}

CMatrix TrajectorySource::hcal(double x) const {
  const auto s = state_at(x);
  const CMatrix uinv = s.u.partialPivLu().inverse();
  return linalg::hermitian_part(
      uinv * linalg::HermitianFactor(H_(x)).solve(uinv.adjoint()));
}

CMatrix TrajectorySource::hcal_y_left(double x) const {
  const auto s = state_at(x);
  const CMatrix j = tr_.triple.sig.matrix();
  return s.u.partialPivLu().solve(
      j * linalg::HermitianFactor(s.S).solve(s.Pi).adjoint());
}

SolutionField general_field(const TrajectorySource& src,
                            const std::vector<double>& xs,
                            const std::vector<double>& ts) {
  validate_grid(xs, "x", true);
  validate_grid(ts, "t", false);
  SolutionField out;
  out.xs = xs;
  out.ts = ts;
  const CMatrix& A = src.triple().A;
  const CMatrix j = src.triple().sig.matrix();
  for (double x : xs) {
    const auto s = src.state_at(x);
    const CMatrix H = src.h0(x);
    const linalg::HermitianFactor sf(s.S);
    const double cond = 1.0 / sf.rcond();
    out.max_condition = std::max(out.max_condition, cond);
    if (cond > 1e12) {
      std::ostringstream msg;
      msg << "x=" << x << ": condition estimate " << cond << " exceeds 1e12";
      out.warnings.push_back(msg.str());
    }
    const CMatrix uinv = s.u.partialPivLu().inverse();
    out.Hcal.push_back(linalg::hermitian_part(
        uinv * linalg::HermitianFactor(H).solve(uinv.adjoint())));
    const CMatrix left = s.u.adjoint() * H * j * sf.solve(s.Pi).adjoint();
    for (double t : ts) out.Y.push_back(left * linalg::mat_exp(kI * t * A));
  }
  return out;
}

}  // namespace gbdt
