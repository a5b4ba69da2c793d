#pragma once

#include <string>
#include <vector>

#include "gbdt/linalg.hpp"
#include "gbdt/triple.hpp"

namespace gbdt {

/// Grid samples of Y(x, t) (m x n each) and Hcal(x) (m x m each).
struct SolutionField {
  std::vector<double> xs;
  std::vector<double> ts;
  std::vector<CMatrix> Y;     // x-major: Y[ix * ts.size() + it]
  std::vector<CMatrix> Hcal;  // one per x
  double max_condition = 1.0;
  std::vector<std::string> warnings;

  const CMatrix& y(std::size_t ix, std::size_t it) const {
    return Y[ix * ts.size() + it];
  }
};

/// Throws InputError unless the grid is finite, nonempty and strictly
/// increasing (and nonnegative when `nonnegative`).
void validate_grid(const std::vector<double>& grid, const std::string& name,
                   bool nonnegative);

/// n equispaced points from a to b inclusive (n == 1 yields {a}).
std::vector<double> linspace(double a, double b, int n);

/// Common read-only view of a transformed solution, implemented by both the
/// closed-form engine and the ODE trajectory. Verification code is written
/// against this interface only.
class SolutionSource {
 public:
  virtual ~SolutionSource() = default;

  virtual std::string engine() const = 0;
  virtual const GBDTTriple& triple() const = 0;
  virtual CMatrix pi(double x) const = 0;
  virtual CMatrix s(double x) const = 0;
  virtual CMatrix s_inv(double x) const = 0;
  virtual CMatrix u(double x) const = 0;
  /// Initial Hamiltonian H(x).
  virtual CMatrix h0(double x) const = 0;
  virtual CMatrix pi_star_s_inv(double x) const = 0;
  virtual CMatrix y(double x, double t) const = 0;
  virtual CMatrix hcal(double x) const = 0;
  /// L(x) with Hcal(x) Y(x, t) = L(x) e^{itA}, i.e. L = j u* Pi* S^{-1}.
  virtual CMatrix hcal_y_left(double x) const = 0;
};

/// Samples src on a grid using Y(x, t) = Y(x, 0) e^{itA}.
SolutionField sample_field(const SolutionSource& src,
                           const std::vector<double>& xs,
                           const std::vector<double>& ts);

}  // namespace gbdt
