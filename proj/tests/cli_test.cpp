// Drives the installed binary end to end: wiring, exit codes, determinism,
// and the manifest contract.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const fs::path kWorkDir = fs::temp_directory_path() / "smartrel_cli_test";

int run_cli(const std::string& args) {
  const std::string command =
      "cd " + kWorkDir.string() + " && " + std::string(SMARTREL_CLI_PATH) + " " + args +
      " >/dev/null 2>cli_stderr.txt";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

struct Setup {
  Setup() {
    fs::remove_all(kWorkDir);
    fs::create_directories(kWorkDir);
  }
};
const Setup setup;

}  // namespace

TEST_CASE("simulate then fit-nhpp writes every declared artifact") {
  write_file(kWorkDir / "nhpp.json",
             R"({"kind": "nhpp",
                 "intensity": {"tag": "power_law", "theta": [0.9, 1.5]},
                 "exposure": [{"start": 0, "end": 40, "rate": 1.0}],
                 "n_units": 25, "follow_up": 40})");
  REQUIRE(run_cli("simulate --scenario nhpp.json --seed 5 --out events.csv "
                  "--exposure-out exposure.csv --followup-out followup.csv") == 0);
  CHECK(fs::exists(kWorkDir / "events.csv"));
  CHECK(fs::exists(kWorkDir / "events.csv.manifest.json"));

  REQUIRE(run_cli("fit-nhpp --events events.csv --exposure exposure.csv "
                  "--followup followup.csv --model ispline --knots 5 "
                  "--out fit.json --curve curve.csv --bif bif.csv --seed 3") == 0);
  CHECK(fs::exists(kWorkDir / "fit.json"));
  CHECK(fs::exists(kWorkDir / "curve.csv"));
  CHECK(fs::exists(kWorkDir / "bif.csv"));
  const std::string curve = slurp(kWorkDir / "curve.csv");
  CHECK(curve.rfind("t,expected,observed,lower,upper", 0) == 0);
  const std::string fit = slurp(kWorkDir / "fit.json");
  CHECK(fit.find("\"converged\": true") != std::string::npos);
}

TEST_CASE("identical command and seed give byte-identical outputs") {
  write_file(kWorkDir / "smart.json",
             R"({"kind": "smart", "horizon": 25,
                 "processes": [{"label": "ood_shift",
                                "intensity": {"tag": "power_law", "theta": [1.0, 1.0]},
                                "exposure": [{"start": 0, "end": 25, "rate": 1.0}]}],
                 "gates": [{"label": "ood_shift", "beta": [0.2]}],
                 "z": []})");
  REQUIRE(run_cli("simulate --scenario smart.json --seed 7 --out a.csv") == 0);
  REQUIRE(run_cli("simulate --scenario smart.json --seed 7 --out b.csv") == 0);
  CHECK(slurp(kWorkDir / "a.csv") == slurp(kWorkDir / "b.csv"));
  // different seed, different stream
  REQUIRE(run_cli("simulate --scenario smart.json --seed 8 --out c.csv") == 0);
  CHECK(slurp(kWorkDir / "a.csv") != slurp(kWorkDir / "c.csv"));
}

TEST_CASE("SMARTREL_SEED overrides when no flag is given") {
  const std::string with_env = "SMARTREL_SEED=7 " + std::string(SMARTREL_CLI_PATH);
  const std::string command = "cd " + kWorkDir.string() + " && " + with_env +
                              " simulate --scenario smart.json --out env.csv "
                              ">/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(command.c_str())) == 0);
  CHECK(slurp(kWorkDir / "env.csv") == slurp(kWorkDir / "a.csv"));
}

TEST_CASE("all-censored data exits 2 and names the error") {
  write_file(kWorkDir / "cens.csv", "unit_id,time,status\nu1,3.0,0\nu2,5.5,0\n");
  CHECK(run_cli("fit-lifetime --data cens.csv --out bad.json") == 2);
  CHECK(slurp(kWorkDir / "cli_stderr.txt").find("AllCensored") != std::string::npos);
}

TEST_CASE("malformed csv exits 2 and reports the line") {
  write_file(kWorkDir / "broken.csv", "unit_id,time,status\nu1,3.0,1\nu2,huh,0\n");
  CHECK(run_cli("fit-lifetime --data broken.csv --out bad.json") == 2);
  const std::string err = slurp(kWorkDir / "cli_stderr.txt");
  CHECK(err.find("broken.csv:3") != std::string::npos);
}

TEST_CASE("manifest reproduces and report verifies the run") {
  write_file(kWorkDir / "life.json",
             R"({"kind": "lifetime", "family": "lognormal",
                 "mu": 1.0, "sigma": 0.4, "n": 200})");
  REQUIRE(run_cli("simulate --scenario life.json --seed 11 --out life.csv") == 0);
  REQUIRE(run_cli("fit-lifetime --data life.csv --family lognormal --out lf.json") == 0);
  CHECK(run_cli("report --manifest lf.json.manifest.json") == 0);
  // manifest names command, seed and version
  const std::string manifest = slurp(kWorkDir / "lf.json.manifest.json");
  CHECK(manifest.find("\"command\": \"fit-lifetime\"") != std::string::npos);
  CHECK(manifest.find("\"version\"") != std::string::npos);
  CHECK(manifest.find("\"inputs\"") != std::string::npos);
  // corrupting an input makes report fail
  write_file(kWorkDir / "life.csv", "unit_id,time,status\nu1,1.0,1\n");
  CHECK(run_cli("report --manifest lf.json.manifest.json") == 2);
}

TEST_CASE("degradation pipeline round trips through the cli") {
  write_file(kWorkDir / "deg.json",
             R"({"kind": "degradation", "model": "random_intercept_slope",
                 "alpha": [5.0, 1.0],
                 "sigma": [[0.25, 0.0], [0.0, 0.04]],
                 "sigma_eps2": 0.01, "n_units": 60,
                 "time_grid": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]})");
  REQUIRE(run_cli("simulate --scenario deg.json --seed 2 --out deg.csv") == 0);
  REQUIRE(run_cli("fit-degradation --data deg.csv --model random_intercept_slope "
                  "--threshold 10 --n-sim 2000 --seed 4 --out dfit.json "
                  "--cdf dcdf.csv") == 0);
  const std::string cdf = slurp(kWorkDir / "dcdf.csv");
  CHECK(cdf.rfind("t,cdf,mc_se", 0) == 0);
  const std::string fit = slurp(kWorkDir / "dfit.json");
  CHECK(fit.find("\"sigma_eps2\"") != std::string::npos);
}

TEST_CASE("doe generates the 28-run design and fits it") {
  REQUIRE(run_cli("doe --gen-design d.csv --z-levels 10,01,00") == 0);
  std::ifstream in(kWorkDir / "d.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 57);  // header + 28 runs x 2 replicates
  write_file(kWorkDir / "resp.py", "");
  // constant responses fit the pure-blend model
  std::ofstream resp(kWorkDir / "r.csv");
  resp << "run,rep,y\n";
  for (int run = 1; run <= 28; ++run) {
    for (int rep = 1; rep <= 2; ++rep) {
      resp << run << "," << rep << ",0.5\n";
    }
  }
  resp.close();
  REQUIRE(run_cli("doe --design d.csv --responses r.csv --out c.json") == 0);
  const std::string coef = slurp(kWorkDir / "c.json");
  CHECK(coef.find("\"beta\"") != std::string::npos);
}

TEST_CASE("uq against its own data file") {
  std::ofstream data(kWorkDir / "uq.csv");
  data << "y,x_1\n";
  for (int i = 0; i < 30; ++i) {
    const double x = 0.1 * i - 1.5;
    data << 2.0 * x << "," << x << "\n";
  }
  data.close();
  REQUIRE(run_cli("uq --data uq.csv --s0-sq 4.0 --sigma-sq 0.25 --out q.json") == 0);
  const std::string q = slurp(kWorkDir / "q.json");
  CHECK(q.find("\"converged\": true") != std::string::npos);
  CHECK(q.find("\"log_evidence\"") != std::string::npos);
}
