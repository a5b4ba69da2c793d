#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "gbdt/errors.hpp"
#include "gbdt/scenario.hpp"
#include "gbdt/serialize.hpp"
#include "gbdt/triple.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("GBDT_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string s(raw);
  if (s.find_first_not_of("0123456789") != std::string::npos ||
      s.size() > 20) {
    throw gbdt::InputError("GBDT_SEED must be a nonnegative integer");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw gbdt::InputError("GBDT_SEED is out of range");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gbdt::InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw gbdt::InputError("write to '" + path + "' failed");
}

/// Prints to stdout, and also to `path` when it is nonempty.
void emit(const std::string& text, const std::string& path) {
  std::cout << text;
  if (!path.empty()) write_text(path, text);
}

int report_status(const gbdt::Report& r) {
  return r.all_pass() ? kExitPass : kExitFail;
}

int cmd_triple_verify(const std::string& path) {
  const gbdt::GBDTTriple t = gbdt::load_triple(path);
  const gbdt::IdentityCheck c = gbdt::verify_identity(t);
  std::cout << gbdt::dump_json(gbdt::identity_check_to_json(c));
  return c.ok ? kExitPass : kExitFail;
}

int cmd_triple_generate(int n, int m1, int m2, std::uint64_t seed,
                        const std::string& spectrum, const std::string& out) {
  if (const auto s = env_seed()) seed = *s;
  gbdt::Json spec;
  spec["n"] = n;
  spec["m1"] = m1;
  spec["m2"] = m2;
  spec["seed"] = seed;
  spec["spectrum"] = spectrum;
  gbdt::Json scenario;
  scenario["triple"] = spec;
  const gbdt::Scenario s = gbdt::parse_scenario(scenario, "", std::nullopt);
  emit(gbdt::dump_json(gbdt::triple_to_json(s.triple)), out);
  return kExitPass;
}

int cmd_triple_complete(const std::string& path, const std::string& out) {
  const gbdt::Json j = gbdt::load_json(path);
  for (const char* key : {"n", "m1", "m2", "A", "Pi0"}) {
    if (!j.contains(key)) {
      throw gbdt::InputError(std::string("complete: missing field '") + key +
                             "'");
    }
  }
  const auto n = j["n"].get<Eigen::Index>();
  const gbdt::SignatureJ sig{j["m1"].get<int>(), j["m2"].get<int>()};
  const gbdt::CMatrix A = gbdt::matrix_from_json(j["A"], "A", n, n);
  const gbdt::CMatrix Pi0 =
      gbdt::matrix_from_json(j["Pi0"], "Pi0", n, sig.m());
  try {
    const gbdt::GBDTTriple t = gbdt::complete_S0(A, Pi0, sig);
    emit(gbdt::dump_json(gbdt::triple_to_json(t)), out);
    return kExitPass;
  } catch (const gbdt::NotPositiveDefiniteError& e) {
    gbdt::Json r;
    r["ok"] = false;
    r["error"] = e.what();
    r["min_eig"] = e.min_eig();
    std::cout << gbdt::dump_json(r);
    return kExitFail;
  } catch (const gbdt::SpectralSeparationError& e) {
    gbdt::Json r;
    r["ok"] = false;
    r["error"] = e.what();
    r["gap"] = e.gap();
    std::cout << gbdt::dump_json(r);
    return kExitFail;
  }
}

int cmd_solve(const std::string& path, std::string field_path,
              std::string meta_path) {
  const gbdt::Scenario s = gbdt::load_scenario(path, env_seed());
  if (field_path.empty()) field_path = s.outputs.field;
  if (meta_path.empty()) meta_path = s.outputs.metadata;
  gbdt::SolveResult r;
  try {
    r = gbdt::solve(s);
  } catch (const gbdt::InputError&) {
    throw;
  } catch (const gbdt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  std::ostringstream csv;
  gbdt::write_field_csv(csv, r.field);
  const std::string meta = gbdt::dump_json(r.metadata);
  if (field_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text(field_path, csv.str());
  }
  if (meta_path.empty()) {
    (field_path.empty() ? std::cerr : std::cout) << meta;
  } else {
    write_text(meta_path, meta);
  }
  for (const auto& w : r.field.warnings) std::cerr << "warning: " << w << "\n";
  return kExitPass;
}

int cmd_check(const std::string& path, std::string report_path) {
  const gbdt::Scenario s = gbdt::load_scenario(path, env_seed());
  if (report_path.empty()) report_path = s.outputs.report;
  const gbdt::Report r = gbdt::run_suite(s);
  emit(gbdt::dump_json(gbdt::report_to_json(r)), report_path);
  return report_status(r);
}

int cmd_asymptotics(const std::string& path, std::string report_path) {
  const gbdt::Scenario s = gbdt::load_scenario(path, env_seed());
  if (report_path.empty()) report_path = s.outputs.report;
  gbdt::Report r;
  gbdt::Json out = gbdt::asymptotics(s, r);
  out["report"] = gbdt::report_to_json(r);
  emit(gbdt::dump_json(out), report_path);
  return report_status(r);
}

int cmd_boundary(const std::string& path, const std::string& subspace,
                 std::string report_path) {
  const gbdt::Scenario s = gbdt::load_scenario(path, env_seed());
  if (report_path.empty()) report_path = s.outputs.report;
  gbdt::Report r;
  gbdt::Json out = gbdt::boundary(s, subspace, r);
  out["report"] = gbdt::report_to_json(r);
  emit(gbdt::dump_json(out), report_path);
  return report_status(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamical canonical systems by GBDT"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gbdt 0.1.0");

  auto* triple = app.add_subcommand("triple", "Verify, generate or complete "
                                              "a parameter triple");
  triple->require_subcommand(1);
  std::string triple_file;
  std::string out_path;
  auto* verify = triple->add_subcommand("verify", "Check the identity");
  verify->add_option("file", triple_file, "Triple JSON")->required();
  int n = 0;
  int m1 = 0;
  int m2 = 0;
  std::uint64_t seed = 0;
  std::string spectrum = "off_real_axis";
  auto* generate = triple->add_subcommand("generate", "Random admissible "
                                                      "triple");
  generate->add_option("--n", n, "State dimension")->required();
  generate->add_option("--m1", m1, "Positive part of the signature")
      ->required();
  generate->add_option("--m2", m2, "Negative part of the signature")
      ->required();
  generate->add_option("--seed", seed, "Generator seed");
  generate->add_option("--spectrum", spectrum,
                       "any | off_real_axis | upper_half_plane");
  generate->add_option("--out", out_path, "Also write the triple here");
  auto* complete = triple->add_subcommand("complete", "Solve for S0 given A "
                                                      "and Pi0");
  complete->add_option("file", triple_file, "JSON with n, m1, m2, A, Pi0")
      ->required();
  complete->add_option("--out", out_path, "Also write the triple here");

  std::string scenario;
  std::string field_path;
  std::string meta_path;
  std::string report_path;
  std::string subspace;
  auto* solve = app.add_subcommand("solve", "Sample Y and Hcal on the grid");
  solve->add_option("scenario", scenario, "Scenario JSON")->required();
  solve->add_option("--field", field_path, "CSV output path");
  solve->add_option("--metadata", meta_path, "Metadata JSON output path");
  auto* check = app.add_subcommand("check", "Run the verification suite");
  check->add_option("scenario", scenario, "Scenario JSON")->required();
  check->add_option("--report", report_path, "Also write the report here");
  auto* asym = app.add_subcommand("asymptotics",
                                  "Limits as x grows and the decay suite");
  asym->add_option("scenario", scenario, "Scenario JSON")->required();
  asym->add_option("--report", report_path, "Also write the output here");
  auto* bnd = app.add_subcommand("boundary", "Boundary matrix for an "
                                             "invariant subspace");
  bnd->add_option("scenario", scenario, "Scenario JSON")->required();
  bnd->add_option("--subspace", subspace,
                  "basis.json or schur:<re|im|abs><op><value>")
      ->required();
  bnd->add_option("--report", report_path, "Also write the output here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*verify) return cmd_triple_verify(triple_file);
    if (*generate) {
      return cmd_triple_generate(n, m1, m2, seed, spectrum, out_path);
    }
    if (*complete) return cmd_triple_complete(triple_file, out_path);
    if (*solve) return cmd_solve(scenario, field_path, meta_path);
    if (*check) return cmd_check(scenario, report_path);
    if (*asym) return cmd_asymptotics(scenario, report_path);
    if (*bnd) return cmd_boundary(scenario, subspace, report_path);
  } catch (const gbdt::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const gbdt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitInput;
}
