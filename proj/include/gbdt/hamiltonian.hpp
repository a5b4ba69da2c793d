#pragma once

// Initial Hamiltonians H(x) > 0 for the general engine.

#include <cmath>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include "gbdt/linalg.hpp"

namespace gbdt {

/// One diagonal channel c + d * exp(r * x).
struct ExpChannel {
  double c = 1.0;
  double d = 0.0;
  double r = 0.0;
  double operator()(double x) const { return c + d * std::exp(r * x); }
};

class HamiltonianField {
 public:
  using Eval = std::function<CMatrix(double)>;

  HamiltonianField(int dim, Eval eval, std::string description,
                   std::string interpolation = "exact");

  static HamiltonianField identity(int dim);
  static HamiltonianField diagonal(std::vector<ExpChannel> channels);
  /// Parses "identity" (with the given dim) or
  /// "diag:c+d*exp(r*x),c2,...". Throws InputError.
  static HamiltonianField parse(const std::string& spec, int dim);
  /// Tabulated H: each row is x followed by m*m real entries (row-major) or
  /// m*m (re, im) pairs; rows strictly increasing in x. Linear interpolation
  /// between rows; evaluation outside the table throws InputError.
  static HamiltonianField from_csv(std::istream& in);
  static HamiltonianField from_csv_file(const std::string& path);

  int dim() const { return dim_; }
  const std::string& description() const { return description_; }
  const std::string& interpolation() const { return interpolation_; }

  /// H(x), checked to be finite, of size dim x dim, Hermitian positive
  /// definite at tolerance 1e-10. Throws InputError otherwise.
  CMatrix operator()(double x) const;

 private:
  int dim_;
  Eval eval_;
  std::string description_;
  std::string interpolation_;
};

}  // namespace gbdt
