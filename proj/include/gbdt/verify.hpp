#pragma once

// Verification harness: PDE residuals, energy and supply-rate accounting,
// decay of the transfer-matrix drivers and boundary-matrix construction.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gbdt/explicit_model.hpp"
#include "gbdt/linalg.hpp"
#include "gbdt/solution.hpp"

namespace gbdt {

/// One named check. A check without a bound is report-only and passes.
struct Check {
  std::string name;
  double residual = 0.0;
  std::optional<double> bound;
  bool pass = true;
  std::string context;
};

struct Report {
  std::vector<Check> checks;

  /// Appends a check with pass = residual <= bound (NaN fails).
  void add(std::string name, double residual, std::optional<double> bound,
           std::string context = {});
  /// Appends a failed check carrying an error message.
  void add_failure(std::string name, std::string context);
  bool all_pass() const;
  std::size_t failures() const;
};

// ---------------------------------------------------------------- PDE --

/// max over interior nodes (indices multiple of `stride`, at least `stride`
/// away from the grid edges) of ||dY/dt - j d(Hcal Y)/dx|| by central
/// differences with the grid spacing. The grids must be uniform.
double pde_residual(const SolutionField& f, const SignatureJ& sig,
                    std::size_t stride = 1);

struct PdeStudy {
  std::vector<double> steps;
  std::vector<double> residuals;
  /// residuals[k] / residuals[k + 1]; about 4 for a second-order residual.
  std::vector<double> ratios;
  std::vector<double> orders;  // log2 of ratios
};

/// Residual on [x0, x1] x [t0, t1] split into nx * 2^k and nt * 2^k
/// intervals, k = 0..refinements-1, always at the nodes of the coarsest grid
/// (nx, nt >= 2). steps records the x spacing.
PdeStudy pde_refinement(const SolutionSource& src, double x0, double x1,
                        int nx, double t0, double t1, int nt,
                        int refinements);

// ------------------------------------------------------------- energy --

struct EnergySample {
  double t = 0.0;
  double a = 0.0;
  CVector h;
  double E = 0.0;
  double E_direct = 0.0;
  double min_eig_gap = 0.0;  // min eigenvalue of S(0)^{-1} - S(a)^{-1}
};

/// E from the closed form (S(a)^{-1} replaced by kS when given) and E_direct
/// by adaptive Simpson quadrature of h* Y* Hcal Y h over [0, a]. Throws
/// Error when S(0)^{-1} - S(a)^{-1} is indefinite beyond 1e-10.
EnergySample energy(const SolutionSource& src, const CVector& h, double a,
                    double t, const std::optional<CMatrix>& kS = std::nullopt,
                    double quad_rel_tol = 1e-10);

struct SupplyRate {
  double via_y = 0.0;  // h* Y* u^{-1} H^{-1} j H^{-1} u^{-*} Y h
  double via_s = 0.0;  // h* e^{-itA*} S^{-1} Pi j Pi* S^{-1} e^{itA} h
  double imag_part = 0.0;
};

SupplyRate supply_rate(const SolutionSource& src, const CVector& h, double x,
                       double t);

struct BalanceResult {
  double lhs = 0.0;  // E(t2)^2 - E(t1)^2
  double rhs = 0.0;  // integral of s(a) - s(0) over [t1, t2]
  double relative_deviation = 0.0;
};

BalanceResult energy_balance(const SolutionSource& src, const CVector& h,
                             double a, double t1, double t2,
                             double quad_tol = 1e-10);

// ------------------------------------------------------------- decay --

struct DecayStudy {
  std::vector<double> schedule;
  std::vector<double> from_q;  // ||theta2* e^{-2ixA*} Q^{-1}||
  std::vector<double> from_r;  // ||theta1* e^{2ixA*} R^{-1}||
  bool q_eventually_decreasing = false;
  bool r_eventually_decreasing = false;
  /// Finite-difference residuals of (Q^{-1})' = -2 dq* dq and
  /// (R^{-1})' = -2 dr* dr at x_fd for steps h and h / 2.
  double x_fd = 1.0;
  std::vector<double> q_fd_residuals;
  std::vector<double> r_fd_residuals;
};

DecayStudy decay_study(const ExplicitModel& model, double x_max,
                       double x_fd = 1.0, double fd_step = 1e-2);

/// Report entries for a decay study; `final_bound` applies to the last
/// schedule values.
void decay_suite(const ExplicitModel& model, double x_max, double final_bound,
                 Report& report);

// ----------------------------------------------------------- boundary --

struct BoundaryDesign {
  CMatrix W;  // m x 2m, orthonormal rows
  std::vector<double> ts;
  std::vector<double> residuals;  // per t
  double residual = 0.0;          // max over t
  double spread = 0.0;            // max - min over t
};

/// Builds W from the left null space of [L(a) basis; L(0) basis] with
/// L(x) = Hcal(x) Y(x, t) e^{-itA}, and evaluates the boundary residual on
/// `ts` (default: 20 equispaced points in [0, 5]). Throws InputError when
/// the basis is not A-invariant or has more than m columns.
BoundaryDesign boundary_design(const SolutionSource& src, double a,
                               const CMatrix& basis,
                               std::vector<double> ts = {});

/// Parses "<re|im|abs><op><value>" with op in <, <=, >, >=.
std::function<bool(Complex)> parse_eigen_predicate(const std::string& spec);

}  // namespace gbdt
