// Exercises the command-line binary end to end. The binary path arrives as
// argv[1] from CTest.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string g_binary;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = g_binary + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("generate writes the expected artifacts deterministically") {
  TempDir tmp;
  std::string out = tmp.sub("gen");
  std::string flags = "generate --d 5 --p 1 --T 200 --seed 1 --out " + out;
  REQUIRE(run(flags) == 0);
  for (const char* f : {"series.csv", "W_true.csv", "A1_true.csv", "meta.json"})
    CHECK(fs::exists(fs::path(out) / f));

  // 200 data rows + header, 5 columns
  std::ifstream in(out + "/series.csv");
  std::string line;
  int rows = -1, commas = 0;
  while (std::getline(in, line)) {
    if (rows < 0)
      for (char c : line) commas += c == ',';
    ++rows;
  }
  CHECK(rows == 200);
  CHECK(commas == 4);

  std::string out2 = tmp.sub("gen2");
  REQUIRE(run("generate --d 5 --p 1 --T 200 --seed 1 --out " + out2) == 0);
  CHECK(slurp(out + "/series.csv") == slurp(out2 + "/series.csv"));
  CHECK(slurp(out + "/W_true.csv") == slurp(out2 + "/W_true.csv"));

  std::string out3 = tmp.sub("gen3");
  REQUIRE(run("generate --d 5 --density 0 --lag-density 0 --T 50 --seed 1 --out " + out3) == 0);
  std::string w = slurp(out3 + "/W_true.csv");
  for (char c : w) CHECK((c == '0' || c == ',' || c == '\n'));
}

TEST_CASE("pipeline generate, fit, eval") {
  TempDir tmp;
  std::string dir = tmp.sub("pipe");
  REQUIRE(run("generate --d 5 --p 1 --T 500 --seed 2 --out " + dir) == 0);
  REQUIRE(run("fit --series " + dir + "/series.csv --p 1 --epochs 60 --seed 2 --out " + dir) == 0);
  for (const char* f :
       {"W_est.csv", "W_est_binary.csv", "A1_est.csv", "A1_est_binary.csv", "report.json"})
    CHECK(fs::exists(fs::path(dir) / f));

  REQUIRE(run("eval --est " + dir + " --truth " + dir + " --p 1 --out " + tmp.sub("ev")) == 0);
  std::string report = slurp(tmp.sub("ev") + "/report.json");
  for (const char* key : {"\"tpr\"", "\"f1\"", "\"shd\"", "\"auroc\"", "\"auprc\"",
                          "\"instantaneous\"", "\"lagged\""})
    CHECK(report.find(key) != std::string::npos);
}

TEST_CASE("eval of truth against itself is perfect") {
  TempDir tmp;
  std::string dir = tmp.sub("truth");
  REQUIRE(run("generate --d 6 --p 1 --T 100 --seed 3 --out " + dir) == 0);
  REQUIRE(run("eval --est " + dir + " --truth " + dir + " --p 1 --out " + tmp.sub("ev")) == 0);
  std::string report = slurp(tmp.sub("ev") + "/report.json");
  CHECK(report.find("\"shd\": 0") != std::string::npos);
  CHECK(report.find("\"f1\": 1.0") != std::string::npos);
}

TEST_CASE("fit is bytewise deterministic") {
  TempDir tmp;
  std::string dir = tmp.sub("data");
  REQUIRE(run("generate --d 4 --p 1 --T 300 --seed 4 --out " + dir) == 0);
  std::string a = tmp.sub("fit_a"), b = tmp.sub("fit_b");
  std::string flags = "fit --series " + dir + "/series.csv --p 1 --epochs 40 --seed 7 --out ";
  REQUIRE(run(flags + a) == 0);
  REQUIRE(run(flags + b) == 0);
  for (const char* f : {"W_est.csv", "W_est_binary.csv", "A1_est.csv", "A1_est_binary.csv"})
    CHECK(slurp(a + "/" + f) == slurp(b + "/" + f));
}

TEST_CASE("ablation routing through the CLI") {
  TempDir tmp;
  std::string dir = tmp.sub("abl");
  REQUIRE(run("generate --d 4 --p 1 --T 300 --seed 5 --out " + dir) == 0);

  std::string base = "fit --series " + dir + "/series.csv --p 1 --epochs 10 --seed 5 ";
  REQUIRE(run(base + "--ablation no-acml --out " + tmp.sub("na")) == 0);
  std::string na = slurp(tmp.sub("na") + "/report.json");
  CHECK(na.find("\"last_acyclicity_term\": 0.0") == std::string::npos);

  REQUIRE(run(base + "--ablation no-qmle --out " + tmp.sub("nq")) == 0);
  std::string nq = slurp(tmp.sub("nq") + "/report.json");
  CHECK(nq.find("\"last_logdet_term\": 0.0") != std::string::npos);

  REQUIRE(run(base + "--ablation no-dgpl --out " + tmp.sub("nd")) == 0);
  CHECK(run(base + "--ablation bogus --out " + tmp.sub("bad")) == 2);
}

TEST_CASE("bad input exits with code 2") {
  TempDir tmp;
  CHECK(run("generate --d 1 --out " + tmp.sub("x")) == 2);
  CHECK(run("fit --series " + tmp.sub("missing.csv")) == 2);
  CHECK(run("eval --est " + tmp.sub("nowhere") + " --truth " + tmp.sub("nowhere")) == 2);
  CHECK(run("nonsense") == 2);

  std::ofstream bad(tmp.sub("bad.csv"));
  bad << "x0,x1\n1.0,2.0\n3.0\n";
  bad.close();
  CHECK(run("fit --series " + tmp.sub("bad.csv") + " --epochs 1") == 2);
}

TEST_CASE("bench aggregates cells into a summary row") {
  TempDir tmp;
  std::string out = tmp.sub("bench");
  REQUIRE(run("bench --d 4 --seeds 1 2 3 --T 200 --p 1 --epochs 15 --jobs 2 --out " + out) == 0);
  REQUIRE(fs::exists(fs::path(out) / "bench_summary.csv"));
  REQUIRE(fs::exists(fs::path(out) / "bench_long.csv"));

  std::ifstream in(out + "/bench_summary.csv");
  std::string line;
  int rows = -1;
  std::string data_row;
  while (std::getline(in, line)) {
    if (rows >= 0) data_row = line;
    ++rows;
  }
  CHECK(rows == 1);
  CHECK(data_row.rfind("4,none,3,0", 0) == 0);
}

int main(int argc, char** argv) {
  if (argc > 1) g_binary = argv[1];
  doctest::Context ctx;
  ctx.applyCommandLine(1, argv);
  return ctx.run();
}
