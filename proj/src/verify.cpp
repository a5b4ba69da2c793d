#include "gbdt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

#include "gbdt/errors.hpp"
#include "gbdt/quadrature.hpp"

namespace gbdt {

namespace {

double uniform_spacing(const std::vector<double>& g, const char* name) {
  if (g.size() < 3) {
    throw InputError(std::string("pde_residual: ") + name +
                     " grid too coarse (need at least 3 points)");
  }
  const double h = g[1] - g[0];
  for (std::size_t k = 1; k < g.size(); ++k) {
    if (std::abs((g[k] - g[k - 1]) - h) > 1e-9 * std::abs(h)) {
      throw InputError(std::string("pde_residual: ") + name +
                       " grid is not uniform");
    }
  }
  return h;
}

double hermitian_form(const CVector& w, const CMatrix& j) {
  return (w.adjoint() * j * w)(0, 0).real();
}

// Increases below 1e-13 * max(1, v[0]) are roundoff, not growth.
bool eventually_decreasing(const std::vector<double>& v) {
  if (v.empty()) return true;
  const double floor = 1e-13 * std::max(1.0, v.front());
  for (std::size_t k = 2; k < v.size(); ++k) {
    if (v[k] > v[k - 1] * (1.0 + 1e-9) + floor) return false;
  }
  return true;
}

}  // namespace

void Report::add(std::string name, double residual,
                 std::optional<double> bound, std::string context) {
  Check c;
  c.name = std::move(name);
  c.residual = residual;
  c.bound = bound;
  c.pass = !bound || (residual <= *bound);
  c.context = std::move(context);
  checks.push_back(std::move(c));
}

void Report::add_failure(std::string name, std::string context) {
  Check c;
  c.name = std::move(name);
  c.residual = std::numeric_limits<double>::quiet_NaN();
  c.bound = 0.0;
  c.pass = false;
  c.context = std::move(context);
  checks.push_back(std::move(c));
}

bool Report::all_pass() const { return failures() == 0; }

std::size_t Report::failures() const {
  return static_cast<std::size_t>(std::count_if(
      checks.begin(), checks.end(), [](const Check& c) { return !c.pass; }));
}

double pde_residual(const SolutionField& f, const SignatureJ& sig,
                    std::size_t stride) {
  const double hx = uniform_spacing(f.xs, "x");
  const double ht = uniform_spacing(f.ts, "t");
  if (stride == 0) throw InputError("pde_residual: stride must be positive");
  const std::size_t nx = f.xs.size();
  const std::size_t nt = f.ts.size();
  if (nx <= 2 * stride || nt <= 2 * stride) {
    throw InputError("pde_residual: no interior nodes at this stride");
  }
  const CMatrix j = sig.matrix();
  double worst = 0.0;
  for (std::size_t ix = stride; ix + stride < nx; ix += stride) {
    for (std::size_t it = stride; it + stride < nt; it += stride) {
      const CMatrix dt = (f.y(ix, it + 1) - f.y(ix, it - 1)) / (2.0 * ht);
      const CMatrix dx = (f.Hcal[ix + 1] * f.y(ix + 1, it) -
                          f.Hcal[ix - 1] * f.y(ix - 1, it)) /
                         (2.0 * hx);
      worst = std::max(worst, (dt - j * dx).norm());
    }
  }
  return worst;
}

PdeStudy pde_refinement(const SolutionSource& src, double x0, double x1,
                        int nx, double t0, double t1, int nt,
                        int refinements) {
  if (refinements < 2 || refinements > 8) {
    throw InputError("pde_refinement: refinement levels must be in [2, 8]");
  }
  if (nx < 2 || nt < 2 || !(x1 > x0) || !(t1 > t0)) {
    throw InputError("pde_refinement: need nx, nt >= 2 and nonempty ranges");
  }
  PdeStudy out;
  for (int k = 0; k < refinements; ++k) {
    const int scale = 1 << k;
    const auto xs = linspace(x0, x1, nx * scale + 1);
    const auto ts = linspace(t0, t1, nt * scale + 1);
    const SolutionField f = sample_field(src, xs, ts);
    out.steps.push_back((x1 - x0) / (nx * scale));
    out.residuals.push_back(
        pde_residual(f, src.triple().sig, static_cast<std::size_t>(scale)));
  }
  for (std::size_t k = 0; k + 1 < out.residuals.size(); ++k) {
    const double r = out.residuals[k] / out.residuals[k + 1];
    out.ratios.push_back(r);
    out.orders.push_back(std::log2(r));
  }
  return out;
}

EnergySample energy(const SolutionSource& src, const CVector& h, double a,
                    double t, const std::optional<CMatrix>& kS,
                    double quad_rel_tol) {
  const CMatrix& A = src.triple().A;
  if (h.size() != A.rows()) throw ShapeError("energy: h has wrong length");
  if (!(a > 0.0)) throw InputError("energy: a must be positive");
  const CMatrix s0inv = src.s_inv(0.0);
  const CMatrix sainv = kS ? *kS : src.s_inv(a);
  const CMatrix gap = linalg::hermitian_part(s0inv - sainv);
  EnergySample out;
  out.t = t;
  out.a = a;
  out.h = h;
  if (gap.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(gap, Eigen::EigenvaluesOnly);
    out.min_eig_gap = es.eigenvalues()(0);
  }
  if (out.min_eig_gap < -1e-10 * std::max(s0inv.norm(), 1.0)) {
    std::ostringstream msg;
    msg << "energy: S(0)^{-1} - S(a)^{-1} is indefinite (min eigenvalue "
        << out.min_eig_gap << ")";
    throw Error(msg.str());
  }
  const CVector v = linalg::mat_exp(kI * t * A) * h;
  out.E = std::sqrt(std::max(0.0, (v.adjoint() * gap * v)(0, 0).real()));

  const auto integrand = [&](double x) {
    const CVector yh = src.y(x, 0.0) * v;
    const CVector hy = src.hcal_y_left(x) * v;
    return (yh.adjoint() * hy)(0, 0).real();
  };
  QuadratureOptions opts;
  opts.rel_tol = quad_rel_tol;
  opts.abs_floor = 1e-12;
  out.E_direct = std::sqrt(std::max(0.0, adaptive_simpson(integrand, 0.0, a,
                                                          opts)));
  return out;
}

SupplyRate supply_rate(const SolutionSource& src, const CVector& h, double x,
                       double t) {
  const GBDTTriple& tr = src.triple();
  if (h.size() != tr.A.rows()) {
    throw ShapeError("supply_rate: h has wrong length");
  }
  const CMatrix j = tr.sig.matrix();
  const CVector v = linalg::mat_exp(kI * t * tr.A) * h;
  const CMatrix G = src.pi_star_s_inv(x);
  const CMatrix form = G.adjoint() * j * G;
  const Complex vs = (v.adjoint() * form * v)(0, 0);

  const CVector yh = src.y(x, t) * h;
  const CMatrix u = src.u(x);
  const linalg::HermitianFactor Hf(src.h0(x));
  const CVector z = Hf.solve(u.adjoint().partialPivLu().solve(yh));

  SupplyRate out;
  out.via_s = vs.real();
  out.imag_part = std::abs(vs.imag());
  out.via_y = hermitian_form(z, j);
  return out;
}

BalanceResult energy_balance(const SolutionSource& src, const CVector& h,
                             double a, double t1, double t2,
                             double quad_tol) {
  if (!(t1 < t2)) throw InputError("energy_balance: need t1 < t2");
  const GBDTTriple& tr = src.triple();
  if (h.size() != tr.A.rows()) {
    throw ShapeError("energy_balance: h has wrong length");
  }
  const CMatrix j = tr.sig.matrix();
  const CMatrix gap = linalg::hermitian_part(src.s_inv(0.0) - src.s_inv(a));
  const auto e2 = [&](double t) {
    const CVector v = linalg::mat_exp(kI * t * tr.A) * h;
    return (v.adjoint() * gap * v)(0, 0).real();
  };
  const CMatrix Ga = src.pi_star_s_inv(a);
  const CMatrix G0 = src.pi_star_s_inv(0.0);
  const auto flux = [&](double t) {
    const CVector v = linalg::mat_exp(kI * t * tr.A) * h;
    return hermitian_form(Ga * v, j) - hermitian_form(G0 * v, j);
  };
  QuadratureOptions opts;
  opts.rel_tol = quad_tol;
  opts.abs_floor = 1e-12;
  BalanceResult out;
  out.lhs = e2(t2) - e2(t1);
  out.rhs = adaptive_simpson(flux, t1, t2, opts);
  const double denom = std::max(std::abs(out.lhs), std::abs(out.rhs));
  const double diff = std::abs(out.lhs - out.rhs);
  out.relative_deviation = denom > 0.0 ? diff / denom : diff;
  return out;
}

DecayStudy decay_study(const ExplicitModel& model, double x_max, double x_fd,
                       double fd_step) {
  if (!(x_max > 0.0)) throw InputError("decay_study: x_max must be positive");
  if (!(fd_step > 0.0) || x_fd - fd_step < 0.0) {
    throw InputError("decay_study: finite-difference stencil leaves x >= 0");
  }
  DecayStudy out;
  for (int k = 0; k <= 20; ++k) {
    const double x = x_max * (1.0 - std::ldexp(1.0, -k));
    const DecayTerms d = model.decay_terms(x);
    out.schedule.push_back(x);
    out.from_q.push_back(d.from_q.norm());
    out.from_r.push_back(d.from_r.norm());
  }
  out.q_eventually_decreasing = eventually_decreasing(out.from_q);
  out.r_eventually_decreasing = eventually_decreasing(out.from_r);

  out.x_fd = x_fd;
  const DecayTerms d = model.decay_terms(x_fd);
  const CMatrix dQ = -2.0 * d.from_q.adjoint() * d.from_q;
  const CMatrix dR = -2.0 * d.from_r.adjoint() * d.from_r;
  for (double h : {fd_step, fd_step / 2}) {
    const Inverses lo = model.inverses_at(x_fd - h);
    const Inverses hi = model.inverses_at(x_fd + h);
    out.q_fd_residuals.push_back(
        ((hi.Qinv - lo.Qinv) / (2 * h) - dQ).norm());
    out.r_fd_residuals.push_back(
        ((hi.Rinv - lo.Rinv) / (2 * h) - dR).norm());
  }
  return out;
}

void decay_suite(const ExplicitModel& model, double x_max, double final_bound,
                 Report& report) {
  const DecayStudy s = decay_study(model, x_max);
  std::ostringstream ctx;
  ctx << "x_max = " << x_max;
  report.add("decay.from_q.final", s.from_q.back(), final_bound, ctx.str());
  report.add("decay.from_r.final", s.from_r.back(), final_bound, ctx.str());
  report.add("decay.from_q.eventually_decreasing",
             s.q_eventually_decreasing ? 0.0 : 1.0, 0.0,
             "1 when the sequence grows beyond roundoff on [x_max / 2, x_max]");
  report.add("decay.from_r.eventually_decreasing",
             s.r_eventually_decreasing ? 0.0 : 1.0, 0.0,
             "1 when the sequence grows beyond roundoff on [x_max / 2, x_max]");
  const auto order_check = [&](const char* name,
                               const std::vector<double>& r) {
    std::ostringstream c;
    c << "residuals " << r[0] << ", " << r[1] << " at x = " << s.x_fd;
    if (r[0] < 1e-11) {
      report.add(name, 0.0, 0.3, c.str() + " (exact up to roundoff)");
    } else {
      report.add(name, std::abs(std::log2(r[0] / r[1]) - 2.0), 0.3,
                 c.str() + "; residual is |order - 2|");
    }
  };
  order_check("decay.q_inverse_derivative.order", s.q_fd_residuals);
  order_check("decay.r_inverse_derivative.order", s.r_fd_residuals);
}

BoundaryDesign boundary_design(const SolutionSource& src, double a,
                               const CMatrix& basis, std::vector<double> ts) {
  const GBDTTriple& tr = src.triple();
  const CMatrix& A = tr.A;
  const int m = tr.sig.m();
  if (basis.rows() != A.rows() || basis.cols() < 1) {
    throw InputError("boundary_design: basis must be n x k with k >= 1");
  }
  if (basis.cols() > m) {
    throw InputError("boundary_design: basis has more than m columns");
  }
  Eigen::HouseholderQR<CMatrix> qr(basis);
  const CMatrix L = qr.householderQ() *
                    CMatrix::Identity(basis.rows(), basis.cols());
  const CMatrix B = L.adjoint() * A * L;
  const double inv_res = (A * L - L * B).norm();
  if (inv_res > 1e-9 * A.norm() * L.norm()) {
    std::ostringstream msg;
    msg << "boundary_design: basis is not A-invariant (residual " << inv_res
        << ")";
    throw InputError(msg.str());
  }
  if (ts.empty()) ts = linspace(0.0, 5.0, 20);

  const CMatrix La = src.hcal_y_left(a);
  const CMatrix L0 = src.hcal_y_left(0.0);
  CMatrix M(2 * m, L.cols());
  M.topRows(m) = La * L;
  M.bottomRows(m) = L0 * L;
  const CMatrix N = linalg::left_nullspace_basis(M, 1e-12);
  if (N.rows() < m) {
    throw Error("boundary_design: left null space has fewer than m rows");
  }
  BoundaryDesign out;
  out.W = N.topRows(m);
  out.ts = ts;
  for (double t : ts) {
    const CMatrix EL = linalg::mat_exp(kI * t * A) * L;
    CMatrix V(2 * m, L.cols());
    V.topRows(m) = La * EL;
    V.bottomRows(m) = L0 * EL;
    out.residuals.push_back((out.W * V).norm());
  }
  const auto [lo, hi] =
      std::minmax_element(out.residuals.begin(), out.residuals.end());
  out.residual = *hi;
  out.spread = *hi - *lo;
  return out;
}

std::function<bool(Complex)> parse_eigen_predicate(const std::string& spec) {
  static const std::regex re(
      R"(^\s*(re|im|abs)\s*(<=|>=|<|>)\s*([+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*$)");
  std::smatch mt;
  if (!std::regex_match(spec, mt, re)) {
    throw InputError("eigenvalue predicate '" + spec +
                     "' is not of the form <re|im|abs><op><value>");
  }
  const std::string part = mt[1];
  const std::string op = mt[2];
  const double value = std::stod(mt[3]);
  return [part, op, value](Complex z) {
    const double q = part == "re" ? z.real()
                     : part == "im" ? z.imag()
                                    : std::abs(z);
    if (op == "<") return q < value;
    if (op == "<=") return q <= value;
    if (op == ">") return q > value;
    return q >= value;
  };
}

}  // namespace gbdt
