#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd =
      env + " '" GBDT_CLI_PATH "' " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string data(const std::string& name) {
  return std::string(GBDT_TEST_DATA) + "/" + name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("gbdt_cli_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

}  // namespace

TEST(Cli, TripleVerifyWorkedExample) {
  const CliResult r = run("triple verify '" + data("ex1.json") + "'");
  EXPECT_EQ(r.status, 0);
  const Json j = Json::parse(r.out);
  EXPECT_LT(j["residual"].get<double>(), 1e-14);
  EXPECT_TRUE(j["ok"].get<bool>());
}

TEST(Cli, TripleVerifyBroken) {
  const CliResult r = run("triple verify '" + data("broken.json") + "'");
  EXPECT_EQ(r.status, 1);
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j["residual"].get<double>(), 2.0, 1e-12);
  EXPECT_FALSE(j["ok"].get<bool>());
}

TEST(Cli, TripleGenerateIsDeterministic) {
  const std::string args = "triple generate --n 2 --m1 1 --m2 1 --seed 7";
  const CliResult a = run(args);
  const CliResult b = run(args);
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const CliResult c = run(args, "GBDT_SEED=8");
  EXPECT_NE(a.out, c.out);
  const CliResult d = run("triple generate --n 2 --m1 1 --m2 1 --seed 8");
  EXPECT_EQ(c.out, d.out);
}

TEST(Cli, TripleComplete) {
  const CliResult r = run("triple complete '" + data("ex1_no_s0.json") + "'");
  EXPECT_EQ(r.status, 0);
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j["S0"][0][0][0].get<double>(), 1.0, 1e-12);
}

TEST(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(run("triple verify /nonexistent/file.json").status, 2);
  EXPECT_EQ(run("check /nonexistent/file.json").status, 2);
  EXPECT_EQ(run("frobnicate").status, 2);
  EXPECT_EQ(run("triple generate --n 2").status, 2);
  EXPECT_EQ(run("check '" + data("ex1_scenario.json") + "'", "GBDT_SEED=abc")
                .status,
            2);
  TempDir tmp;
  std::ofstream(tmp / "bad.json") << "{ not json";
  EXPECT_EQ(run("check '" + (tmp / "bad.json").string() + "'").status, 2);
}

TEST(Cli, SolveWorkedExampleRowCount) {
  TempDir tmp;
  const std::string csv = (tmp / "f.csv").string();
  const std::string meta = (tmp / "m.json").string();
  const CliResult r = run("solve '" + data("ex1_scenario.json") + "' --field '" +
                    csv + "' --metadata '" + meta + "'");
  ASSERT_EQ(r.status, 0);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,t,block,row,col,re,im");
  long y_rows = 0;
  long h_rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find(",Y,") != std::string::npos) ++y_rows;
    if (line.find(",Hcal,") != std::string::npos) ++h_rows;
    if (first) {
      EXPECT_EQ(line.rfind("0,0,Y,0,0,", 0), 0u);
      const double re = std::stod(line.substr(10, line.find(',', 10) - 10));
      EXPECT_NEAR(re, std::sqrt(2.0), 1e-12);
      first = false;
    }
  }
  EXPECT_EQ(y_rows, 50 * 50 * 2);
  EXPECT_EQ(h_rows, 50 * 4);
  const Json m = Json::parse(slurp(meta));
  EXPECT_EQ(m["engine"], "explicit");
}

TEST(Cli, SolveZeroPiGivesZeroY) {
  const CliResult r = run("solve '" + data("zero_pi_scenario.json") + "'");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  int y_rows = 0;
  while (std::getline(in, line)) {
    if (line.find(",Y,") == std::string::npos) continue;
    ++y_rows;
    EXPECT_TRUE(line.size() > 4 &&
                line.compare(line.size() - 4, 4, ",0,0") == 0)
        << line;
  }
  EXPECT_EQ(y_rows, 11 * 11 * 2 * 2);
}

TEST(Cli, CheckExitCodes) {
  EXPECT_EQ(run("check '" + data("ex1_scenario.json") + "'").status, 0);
  EXPECT_EQ(run("check '" + data("impossible_scenario.json") + "'").status, 1);
  EXPECT_EQ(run("check '" + data("broken_scenario.json") + "'").status, 1);
  const CliResult g = run("check '" + data("general_identity_scenario.json") + "'");
  EXPECT_EQ(g.status, 0);
  bool found = false;
  for (const auto& c : Json::parse(g.out)) {
    if (c["name"] == "cross_engine") {
      found = true;
      EXPECT_TRUE(c["pass"].get<bool>());
    }
  }
  EXPECT_TRUE(found);
}

TEST(Cli, AsymptoticsAndBoundary) {
  const CliResult a = run("asymptotics '" + data("ex1_scenario.json") + "'");
  EXPECT_EQ(a.status, 0);
  EXPECT_TRUE(Json::parse(a.out).contains("wa_limit"));
  const CliResult b = run("boundary '" + data("ex1_scenario.json") +
                    "' --subspace 'schur:im>0'");
  EXPECT_EQ(b.status, 0);
  const Json j = Json::parse(b.out);
  EXPECT_EQ(j["W"].size(), 2u);
  EXPECT_EQ(j["W"][0].size(), 4u);
  TempDir tmp;
  std::ofstream(tmp / "basis.json") << "[[[1.0, 0.0]]]";
  const CliResult c = run("boundary '" + data("ex1_scenario.json") +
                    "' --subspace '" + (tmp / "basis.json").string() + "'");
  EXPECT_EQ(c.status, 0);
  EXPECT_EQ(run("boundary '" + data("ex1_scenario.json") + "'").status, 2);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  TempDir tmp;
  for (const char* name : {"ex1_scenario.json", "generated_scenario.json",
                           "general_identity_scenario.json"}) {
    std::string prev_csv;
    std::string prev_report;
    for (int k = 0; k < 2; ++k) {
      const std::string csv = (tmp / "f.csv").string();
      const std::string meta = (tmp / "m.json").string();
      ASSERT_EQ(run("solve '" + data(name) + "' --field '" + csv +
                    "' --metadata '" + meta + "'")
                    .status,
                0);
      const std::string out = slurp(csv) + slurp(meta);
      const std::string report = run("check '" + data(name) + "'").out;
      if (k == 1) {
        EXPECT_EQ(out, prev_csv) << name;
        EXPECT_EQ(report, prev_report) << name;
      }
      prev_csv = out;
      prev_report = report;
    }
  }
}
