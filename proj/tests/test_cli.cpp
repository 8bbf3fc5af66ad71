#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "orthosync/io.hpp"
#include "orthosync/stats.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = ORTHOSYNC_CLI_PATH;
const fs::path kWork = "/tmp/orthosync_cli_test";

int run_cli(const std::string& args, const std::string& stdout_path = "") {
  std::string cmd = kCli + " " + args;
  if (!stdout_path.empty())
    cmd += " > " + stdout_path + " 2>&1";
  else
    cmd += " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::map<std::string, std::string> read_metadata(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
} workspace;

}  // namespace

TEST_CASE("generate writes a problem whose header round trips") {
  const fs::path out = kWork / "p1.bin";
  const int rc = run_cli("generate -n 12 -d 2 --sigma 0.5 --seed 7 -o " +
                         out.string());
  CHECK(rc == 0);
  REQUIRE(fs::exists(out));
  const orthosync::SyncProblem p = orthosync::io::load_problem(out.string());
  CHECK(p.truth.n == 12);
  CHECK(p.truth.d == 2);
  CHECK(p.sigma == 0.5);
  CHECK(p.seed == 7);
}

TEST_CASE("generate rejects negative sigma with a usage exit") {
  CHECK(run_cli("generate -n 10 -d 2 --sigma -1 -o " +
                (kWork / "bad.bin").string()) == 2);
}

TEST_CASE("generate prints the paper-scale snr") {
  const fs::path out = kWork / "p800.bin";
  const fs::path log = kWork / "gen800.log";
  const int rc = run_cli(
      "generate -n 800 -d 5 --c-sigma 0.05 --seed 1 -o " + out.string(),
      log.string());
  CHECK(rc == 0);
  const std::string text = slurp(log);
  CHECK(text.find("SNR=20") != std::string::npos);
  fs::remove(out);
}

TEST_CASE("estimate on a noiseless problem reports exact recovery") {
  const fs::path problem = kWork / "clean.bin";
  REQUIRE(run_cli("generate -n 16 -d 3 --sigma 0 --seed 3 -o " +
                  problem.string()) == 0);
  const fs::path est = kWork / "clean_mle.bin";
  CHECK(run_cli("estimate -i " + problem.string() + " -m mle -o " +
                est.string()) == 0);
  const auto meta = read_metadata(est.string() + ".meta");
  REQUIRE(meta.count("dist_f"));
  CHECK(std::stod(meta.at("dist_f")) <= 1e-8);
  CHECK(meta.at("certified") == "true");

  CHECK(run_cli("estimate -i /tmp/orthosync_nonexistent.bin -o " +
                (kWork / "x.bin").string()) == 2);
}

TEST_CASE("uq on the truth writes all-zero residuals and the chi2 limit") {
  const fs::path problem = kWork / "uq_clean.bin";
  REQUIRE(run_cli("generate -n 20 -d 5 --sigma 0 --seed 11 -o " +
                  problem.string()) == 0);
  const fs::path est = kWork / "uq_est.bin";
  REQUIRE(run_cli("estimate -i " + problem.string() + " -m spectral -o " +
                  est.string()) == 0);
  const std::string prefix = (kWork / "uq_run").string();
  CHECK(run_cli("uq -p " + problem.string() + " -e " + est.string() +
                " --alpha 0.05 -o " + prefix) == 0);

  // Residual columns are numerically zero.
  std::ifstream csv(prefix + "_expansion.csv");
  std::string line;
  std::getline(csv, line);  // seed comment
  std::getline(csv, line);  // header
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // block
    std::getline(ss, cell, ',');  // sym_residual
    CHECK(std::stod(cell) <= 1e-9);
    ++rows;
  }
  CHECK(rows == 20);

  // sigma_hat ~ 0 so c collapses to sqrt(chi2_{10, 0.95}).
  const auto meta = read_metadata(prefix + "_uq.txt");
  const double c_value = std::stod(meta.at("c_value"));
  CHECK(c_value == doctest::Approx(std::sqrt(orthosync::stats::chi2_quantile(
                                       10, 0.95)))
                       .epsilon(1e-6));

  CHECK(run_cli("uq -p " + problem.string() + " -e " + est.string() +
                " --alpha 1.5 -o " + prefix) == 2);
}

TEST_CASE("experiment emits the three figure summaries deterministically") {
  const std::string common =
      " -n 20 -d 2 --trials 1 --grid 0.1 0.2 0.3 --seed 99 --workers 2";
  const fs::path dir1 = kWork / "exp1";
  const fs::path dir2 = kWork / "exp2";
  CHECK(run_cli("experiment -o " + dir1.string() + common) == 0);
  CHECK(run_cli("experiment -o " + dir2.string() + common) == 0);

  for (const char* estimator : {"mle", "spectral"}) {
    for (const char* fig :
         {"fig1_second_order_", "fig2_ks_pvalues_", "fig3_first_order_coef_"}) {
      CHECK(fs::exists(dir1 / (std::string(fig) + estimator + ".csv")));
      CHECK(fs::exists(dir1 / (std::string(fig) + estimator + ".json")));
    }
  }
  CHECK(fs::exists(dir1 / "results.csv"));
  CHECK(fs::exists(dir1 / "slopes.csv"));
  CHECK(fs::exists(dir1 / "coverage.csv"));
  CHECK(fs::exists(dir1 / "run_metadata.txt"));

  CHECK(slurp(dir1 / "results.csv") == slurp(dir2 / "results.csv"));
  const std::string header = slurp(dir1 / "results.csv").substr(0, 64);
  CHECK(header.find("seed=99") != std::string::npos);
}

TEST_CASE("experiment with an empty grid is a usage error") {
  const fs::path config = kWork / "empty.json";
  std::ofstream(config) << "{\"sigma_grid\": []}";
  CHECK(run_cli("experiment -c " + config.string() + " -o " +
                (kWork / "exp_empty").string()) == 2);
}
