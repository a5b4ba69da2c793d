#pragma once

// Transformation of an arbitrary initial Hamiltonian by fixed-step RK4
// integration of
//   Pi' = -i A Pi j H,   S' = Pi j H j Pi*,   u' = -q0 u,   u(0) = I.

#include <optional>
#include <string>
#include <vector>

#include "gbdt/hamiltonian.hpp"
#include "gbdt/linalg.hpp"
#include "gbdt/solution.hpp"
#include "gbdt/triple.hpp"

namespace gbdt {

/// j Pi* S^{-1} Pi j H - j H j Pi* S^{-1} Pi. Throws
/// NotPositiveDefiniteError if S is not positive definite.
CMatrix q0_tilde(const CMatrix& Pi, const CMatrix& S, const CMatrix& H,
                 const SignatureJ& sig);

struct TrajectoryState {
  CMatrix Pi;
  CMatrix S;
  CMatrix u;
};

struct Trajectory {
  GBDTTriple triple;
  double step = 0.0;
  double a = 0.0;
  std::vector<double> xs;
  std::vector<TrajectoryState> states;
  std::vector<CMatrix> H;
  /// False when integration stopped early; `diagnostic` then says why and
  /// the vectors end at the last accepted node.
  bool complete = true;
  std::string diagnostic;

  std::size_t size() const { return xs.size(); }
  /// Index of the node equal to x (within 1e-9 * step); throws InputError.
  std::size_t node_index(double x) const;
};

/// Integrates on [0, a] with a / step nodes intervals; a / step must be an
/// integer (within 1e-9) of at least 8. Throws InputError for bad arguments
/// or H failures. Positivity loss of S stops integration and yields a
/// partial trajectory.
Trajectory integrate(const GBDTTriple& t, const HamiltonianField& H, double a,
                     double step);

/// u* H j Pi* S^{-1} e^{itA} at node k.
CMatrix y_general(const Trajectory& tr, std::size_t k, double t);
/// u^{-1} H^{-1} u^{-*} at node k.
CMatrix hcal_general(const Trajectory& tr, std::size_t k);
/// u^{-1} j Pi* S^{-1} at node k, so that Hcal Y = (this) e^{itA}.
CMatrix hcal_y_left_general(const Trajectory& tr, std::size_t k);

/// jH^{-1} = T D T^{-1} with D diagonal.
struct Diagonalization {
  CMatrix T;
  CVector D;
};

/// Dense eigendecomposition of j H^{-1}; throws Error when the eigenvector
/// condition number exceeds 1e8.
Diagonalization diagonalize_jhinv(const CMatrix& H, const SignatureJ& sig);

struct HcalSimilarity {
  CMatrix Hcal;
  CMatrix Tcal;  // (j u j)^{-1} T
  double factorization_residual = 0.0;  // ||jH^{-1} - T D T^{-1}||
  double residual = 0.0;                // ||j Hcal - Tcal D Tcal^{-1}||
};

/// Hcal at node k with the similarity witness for a supplied (or computed,
/// when `diag` is empty) factorization. Throws Error when the supplied
/// factorization fails ||jH^{-1} - T D T^{-1}|| <= 1e-9 ||H^{-1}||.
HcalSimilarity hcal_similarity(const Trajectory& tr, std::size_t k,
                               const std::optional<Diagonalization>& diag);

/// SolutionSource over a trajectory. Off-node x are reached by one partial
/// RK4 step from the preceding node.
class TrajectorySource : public SolutionSource {
 public:
  TrajectorySource(const Trajectory& tr, const HamiltonianField& H);

  std::string engine() const override { return "general"; }
  const GBDTTriple& triple() const override { return tr_.triple; }
  CMatrix pi(double x) const override { return state_at(x).Pi; }
  CMatrix s(double x) const override { return state_at(x).S; }
  CMatrix s_inv(double x) const override;
  CMatrix u(double x) const override { return state_at(x).u; }
  CMatrix h0(double x) const override { return H_(x); }
  CMatrix pi_star_s_inv(double x) const override;
  CMatrix y(double x, double t) const override;
  CMatrix hcal(double x) const override;
  CMatrix hcal_y_left(double x) const override;

  TrajectoryState state_at(double x) const;

 private:
  const Trajectory& tr_;
  const HamiltonianField& H_;
};

/// Grid samples from a trajectory (xs need not be nodes).
SolutionField general_field(const TrajectorySource& src,
                            const std::vector<double>& xs,
                            const std::vector<double>& ts);

}  // namespace gbdt
