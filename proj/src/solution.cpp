#include "gbdt/solution.hpp"

#include <cmath>

#include "gbdt/errors.hpp"

namespace gbdt {

void validate_grid(const std::vector<double>& grid, const std::string& name,
                   bool nonnegative) {
  if (grid.empty()) throw InputError(name + " grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!std::isfinite(grid[k])) throw InputError(name + " grid not finite");
    if (nonnegative && grid[k] < 0.0) {
      throw InputError(name + " grid must be nonnegative");
    }
    if (k > 0 && !(grid[k] > grid[k - 1])) {
      throw InputError(name + " grid must be strictly increasing");
    }
  }
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw InputError("linspace: need at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = a;
    return out;
  }
  const double h = (b - a) / (n - 1);
  for (int k = 0; k < n; ++k) out[k] = a + h * k;
  out[n - 1] = b;
  return out;
}

SolutionField sample_field(const SolutionSource& src,
                           const std::vector<double>& xs,
                           const std::vector<double>& ts) {
  validate_grid(xs, "x", true);
  validate_grid(ts, "t", false);
  const CMatrix& A = src.triple().A;
  std::vector<CMatrix> props;
  props.reserve(ts.size());
  for (double t : ts) props.push_back(linalg::mat_exp(kI * t * A));
  SolutionField out;
  out.xs = xs;
  out.ts = ts;
  out.Y.reserve(xs.size() * ts.size());
  out.Hcal.reserve(xs.size());
  for (double x : xs) {
    const CMatrix base = src.y(x, 0.0);
    out.Hcal.push_back(src.hcal(x));
    for (const CMatrix& E : props) out.Y.push_back(base * E);
  }
  return out;
}

}  // namespace gbdt
