#pragma once

// Scenario files: a triple source, an engine, grids, a check list,
// tolerance overrides and output paths. The runners below back the CLI.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gbdt/explicit_model.hpp"
#include "gbdt/general_engine.hpp"
#include "gbdt/hamiltonian.hpp"
#include "gbdt/serialize.hpp"
#include "gbdt/verify.hpp"

namespace gbdt {

struct GridSpec {
  double x0 = 0.0;
  double x1 = 1.0;
  int nx = 11;
  double t0 = 0.0;
  double t1 = 1.0;
  int nt = 11;

  std::vector<double> xs() const { return linspace(x0, x1, nx); }
  std::vector<double> ts() const { return linspace(t0, t1, nt); }
};

struct OutputSpec {
  std::string field;     // CSV path for solve
  std::string metadata;  // JSON path for solve
  std::string report;    // JSON path for check / asymptotics / boundary
};

struct Scenario {
  std::string name;
  GBDTTriple triple;
  /// Generator seed when the triple came from a generator spec.
  std::optional<std::uint64_t> seed;
  std::string engine = "explicit";
  std::string hamiltonian = "identity";
  double step = 1e-3;
  GridSpec grid;
  std::vector<std::string> checks;
  std::map<std::string, double> tolerances;
  OutputSpec outputs;
  /// Directory against which relative paths in the file are resolved.
  std::string base_dir;

  /// Override when present, otherwise the documented default. Throws
  /// InputError for unknown keys.
  double tol(const std::string& key) const;
};

/// Default value of every tolerance key.
const std::map<std::string, double>& default_tolerances();
/// Every check name with the engines it applies to.
std::vector<std::string> known_checks(const std::string& engine);

/// Parses a scenario document. `seed_override` replaces the generator seed.
/// Throws InputError on any malformed or inconsistent field.
Scenario parse_scenario(const Json& j, const std::string& base_dir,
                        std::optional<std::uint64_t> seed_override);
Scenario load_scenario(const std::string& path,
                       std::optional<std::uint64_t> seed_override);

/// Builds the engine a scenario names and exposes it as a SolutionSource.
class Engine {
 public:
  static std::unique_ptr<Engine> build(const Scenario& s);

  const SolutionSource& source() const { return *source_; }
  /// Null for the general engine.
  const ExplicitModel* explicit_model() const {
    return model_ ? &*model_ : nullptr;
  }
  /// Null for the explicit engine.
  const Trajectory* trajectory() const {
    return trajectory_ ? &*trajectory_ : nullptr;
  }
  const HamiltonianField& hamiltonian() const { return *H_; }

 private:
  Engine() = default;
  std::optional<ExplicitModel> model_;
  std::optional<HamiltonianField> H_;
  std::optional<Trajectory> trajectory_;
  std::unique_ptr<SolutionSource> source_;
};

/// Runs the scenario's checks. Component errors become failed checks; a
/// triple that violates the identity fails that check and skips the rest.
Report run_suite(const Scenario& s);

struct SolveResult {
  SolutionField field;
  Json metadata;
};

/// Samples Y and Hcal on the scenario grid. Throws InputError when the
/// triple violates the identity.
SolveResult solve(const Scenario& s);

/// kappa limits, the limit of w_A(x, 0), the asymptotic form of Y and the
/// decay suite (explicit engine only). Checks are appended to `report`.
Json asymptotics(const Scenario& s, Report& report);

/// Boundary matrix for the subspace named by `subspace`: a JSON basis file
/// (n x k matrix) or "schur:<predicate>". Checks are appended to `report`.
Json boundary(const Scenario& s, const std::string& subspace, Report& report);

}  // namespace gbdt
