#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "treespec/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "treespec_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out_file = work_dir() / "stdout.txt";
  const std::string cmd =
      std::string(TREESPEC_CLI) + " " + args + " > " + out_file.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out_file);
  std::stringstream buf;
  buf << in.rdbuf();
  res.stdout_text = buf.str();
  return res;
}

std::string config_path(const std::string& name) {
  return (fs::path(TREESPEC_CONFIG_DIR) / name).string();
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream out(p);
  out << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("validate accepts the sample configs") {
  for (const char* name :
       {"free.json", "periodic_l1_b4.json", "fibonacci.json", "preperiodic_mixed.json"}) {
    auto res = run_cli("validate --config " + config_path(name));
    INFO(name << ": " << res.stdout_text);
    CHECK(res.exit_code == 0);
    CHECK(res.stdout_text.find("valid:") != std::string::npos);
  }
  // gamma is reported
  auto res = run_cli("validate --config " + config_path("periodic_l1_b4.json"));
  CHECK(res.stdout_text.find("gamma=1") != std::string::npos);
}

TEST_CASE("validate exit codes distinguish parse and validation failures") {
  SECTION("malformed JSON exits 1") {
    const auto p = write_config("broken.json", "{\"geometry\": {");
    CHECK(run_cli("validate --config " + p).exit_code == 1);
  }
  SECTION("missing file exits 1") {
    CHECK(run_cli("validate --config /nonexistent/nope.json").exit_code == 1);
  }
  SECTION("branching 1.0 exits 2") {
    const auto p = write_config("flat.json",
                                R"({"geometry": {"kind": "explicit",
                                     "edges": [{"length": 1.0, "branching": 1.0}]}})");
    CHECK(run_cli("validate --config " + p).exit_code == 2);
  }
  SECTION("zero length exits 2") {
    const auto p = write_config("zero.json",
                                R"({"geometry": {"kind": "explicit",
                                     "edges": [{"length": 0.0, "branching": 2.0}]}})");
    CHECK(run_cli("validate --config " + p).exit_code == 2);
  }
  SECTION("unknown flags are errors") {
    CHECK(run_cli("validate --config " + config_path("free.json") + " --bogus").exit_code != 0);
  }
}

TEST_CASE("TOML configs normalise to the same geometry as JSON") {
  auto from_json = run_cli("validate --config " + config_path("periodic_l1_b4.json") +
                           " --emit-normalized");
  auto from_toml = run_cli("validate --config " + config_path("periodic_l1_b4.toml") +
                           " --emit-normalized");
  REQUIRE(from_json.exit_code == 0);
  REQUIRE(from_toml.exit_code == 0);
  // drop the leading summary line, compare the normalized JSON bodies
  const auto body = [](const std::string& s) { return s.substr(s.find('\n') + 1); };
  CHECK(body(from_json.stdout_text) == body(from_toml.stdout_text));
}

TEST_CASE("emit-normalized round-trips") {
  const fs::path norm = work_dir() / "normalized.json";
  auto first = run_cli("validate --config " + config_path("preperiodic_mixed.json") +
                       " --emit-normalized --output " + norm.string());
  REQUIRE(first.exit_code == 0);
  // the normalized geometry must re-validate and re-normalise identically
  const auto p = write_config("roundtrip.json",
                              "{\"geometry\": " + slurp(norm) + "}");
  const fs::path norm2 = work_dir() / "normalized2.json";
  auto second = run_cli("validate --config " + p + " --emit-normalized --output " + norm2.string());
  REQUIRE(second.exit_code == 0);
  CHECK(slurp(norm) == slurp(norm2));
}

TEST_CASE("bands writes CSV containing the closed-form first band") {
  const fs::path out = work_dir() / "bands_report";
  auto res = run_cli("bands --config " + config_path("periodic_l1_b4.json") +
                     " --e-min 0 --e-max 7 --format both --output " + out.string());
  REQUIRE(res.exit_code == 0);
  const std::string csv = slurp(out.string() + ".csv");
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "band,e_lo,e_hi");
  REQUIRE(std::getline(lines, row));
  double lo = 0.0, hi = 0.0;
  std::sscanf(row.c_str(), "0,%lf,%lf", &lo, &hi);
  CHECK(std::abs(lo - std::pow(std::acos(0.8), 2)) < 1e-5);
  CHECK(std::abs(hi - std::pow(M_PI - std::acos(0.8), 2)) < 1e-5);

  const json j = json::parse(slurp(out.string() + ".json"));
  CHECK(j["schema"] == "treespec/1");
  CHECK(j["bands"].size() == 1);
}

TEST_CASE("sigma-ac reports are deterministic byte for byte") {
  const fs::path out1 = work_dir() / "sigma1";
  const fs::path out2 = work_dir() / "sigma2";
  const std::string base = "sigma-ac --config " + config_path("periodic_l1_b4.json") +
                           " --e-min 0 --e-max 7 --grid 60 --format both --threads 3 --output ";
  REQUIRE(run_cli(base + out1.string()).exit_code == 0);
  REQUIRE(run_cli(base + out2.string()).exit_code == 0);
  CHECK(slurp(out1.string() + ".json") == slurp(out2.string() + ".json"));
  CHECK(slurp(out1.string() + ".csv") == slurp(out2.string() + ".csv"));

  SECTION("CSV column contract") {
    std::istringstream lines(slurp(out1.string() + ".csv"));
    std::string header;
    std::getline(lines, header);
    CHECK(header == "E,y,re_m,im_m,radius,class");
    std::size_t rows = 0;
    std::string row;
    while (std::getline(lines, row))
      if (!row.empty()) ++rows;
    CHECK(rows == 60 * 5);  // one row per (E, y)
  }
  SECTION("JSON schema fields") {
    const json j = json::parse(slurp(out1.string() + ".json"));
    CHECK(j["schema"] == "treespec/1");
    CHECK(j["command"] == "sigma-ac");
    CHECK(j["mode"] == "exact-periodic-tail");
    CHECK(j["records"].size() == 60);
    CHECK(j["records"][0]["ladder"].size() == 5);
  }
}

TEST_CASE("sigma-ac over generations writes per-generation and union blocks") {
  const fs::path out = work_dir() / "sigma_gen";
  auto res = run_cli("sigma-ac --config " + config_path("periodic_l1_b4.json") +
                     " --e-min 0.5 --e-max 6 --grid 20 --generations 2 --output " + out.string());
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(slurp(out.string() + ".json"));
  REQUIRE(j["generations_reports"].size() == 3);
  CHECK(j["generations_reports"][2]["multiplicity"] == 12);
  CHECK(j["union_class"].size() == 20);
  // equilateral profile: every generation sees the same tail, union = gen 0
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(j["union_class"][i] == j["generations_reports"][0]["records"][i]["class"]);
}

TEST_CASE("m command prints the free-line value and exit codes track convergence") {
  auto res = run_cli("m --config " + config_path("free.json") + " --z 1.0+0.001i");
  REQUIRE(res.exit_code == 0);
  // i sqrt(1 + 0.001i) ~ -0.0005 + 1.0i
  CHECK(res.stdout_text.find("m(1.0+0.001i) =") != std::string::npos);
  double re = 0.0, im = 0.0;
  std::sscanf(res.stdout_text.c_str(), "m(1.0+0.001i) = %lf + %lf", &re, &im);
  CHECK(std::abs(re - (-0.0005)) < 1e-4);
  CHECK(std::abs(im - 1.0) < 1e-4);

  SECTION("forced truncation on a short window reports non-convergence as exit 3") {
    // window-only geometry, tiny b_max via config analysis, tight tol
    const auto p = write_config("fib_short.json", R"({
      "geometry": {"kind": "substitution",
        "alphabet": {"A": {"length": 1.0, "branching": 2},
                      "B": {"length": 2.0, "branching": 2}},
        "rules": {"A": "AB", "B": "A"}, "axiom": "A", "depth": 8},
      "analysis": {"count": 64, "b_max": 30.0}})");
    auto r = run_cli("m --config " + p + " --z 2.0+0.001i --tol 1e-12");
    CHECK(r.exit_code == 3);
    CHECK(r.stdout_text.find("not converged") != std::string::npos);
  }
}

TEST_CASE("decompose prints multiplicities") {
  auto res = run_cli("decompose --config " + config_path("periodic_l1_b4.json") +
                     " --generations 3");
  REQUIRE(res.exit_code == 0);
  CHECK(res.stdout_text.find("multiplicities 1 3 12 48") != std::string::npos);
}

TEST_CASE("periodicity reports the minimal pair for a periodic window") {
  auto res = run_cli("periodicity --config " + config_path("preperiodic_mixed.json"));
  REQUIRE(res.exit_code == 0);
  const bool minimal_found =
      res.stdout_text.find("(preperiod, period) = (0, 2)") != std::string::npos ||
      res.stdout_text.find("(preperiod, period) = (1, 2)") != std::string::npos;
  CHECK(minimal_found);

  SECTION("fibonacci window shows no early periodicity") {
    auto r = run_cli("periodicity --config " + config_path("fibonacci.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.stdout_text.find("no early periodicity") != std::string::npos);
  }
  SECTION("report JSON carries the verified window and sfdp block") {
    const fs::path out = work_dir() / "per_report";
    auto r = run_cli("periodicity --config " + config_path("preperiodic_mixed.json") +
                     " --output " + out.string());
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(slurp(out.string() + ".json"));
    CHECK(j["schema"] == "treespec/1");
    CHECK(j["verified_window"].get<int>() > 0);
    CHECK(j["sfdp"]["certified"].get<bool>());
    CHECK(j["fdp"]["status"] == "ok");
  }
}

TEST_CASE("reflectionless requires a periodic profile and reports defects") {
  auto res = run_cli("reflectionless --config " + config_path("periodic_l1_b4.json") +
                     " --e-min 1 --e-max 6 --grid 11 --y 1e-6");
  REQUIRE(res.exit_code == 0);
  CHECK(res.stdout_text.find("defect range") != std::string::npos);

  auto bad = run_cli("reflectionless --config " + config_path("fibonacci.json"));
  CHECK(bad.exit_code == 2);
}
