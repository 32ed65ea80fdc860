#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fks/io.hpp"
#include "support.hpp"

using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string& name) {
  const auto dir = fks::test::test_dir() + "/cli_" + name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Run fks_cli(const std::string& args, const std::string& env = "") {
  const auto dir = fks::test::test_dir();
  const std::string out = dir + "/cli_stdout.txt";
  const std::string err = dir + "/cli_stderr.txt";
  const std::string cmd = env + " " + FKS_CLI_PATH + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string simulate_small(const std::string& dir) {
  const auto r = fks_cli("simulate --curves-per-group 4 --points 30 --seed 3 --out " + dir);
  EXPECT_EQ(r.code, 0) << r.err;
  return dir + "/dataset.csv";
}

}  // namespace

TEST(Cli, SimulateWritesDatasetAndLabels) {
  const auto dir = fresh_dir("sim");
  simulate_small(dir);
  const auto d = fks::read_dataset(dir + "/dataset.csv");
  EXPECT_EQ(d.n_points(), 30);
  EXPECT_EQ(d.n_curves(), 16);
  EXPECT_EQ(d.lo, 0.0);
  EXPECT_EQ(d.hi, 5.0);
  const auto labels = fks::read_labels(dir + "/labels.csv");
  EXPECT_EQ(labels, (std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4}));
  EXPECT_TRUE(std::filesystem::exists(dir + "/means.csv"));
}

TEST(Cli, FitReportsDiagnostics) {
  const auto dir = fresh_dir("fit");
  const auto data = simulate_small(dir);
  const auto r = fks_cli("fit --data " + data + " --nbasis 8 --grid-size 20 --truth-labels " + dir +
                         "/labels.csv --out " + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto diag = json::parse(slurp(dir + "/diagnostics.json"));
  EXPECT_GT(diag.at("df").get<double>(), 1.0);
  EXPECT_LT(diag.at("df").get<double>(), 8.0 + 1e-9);
  EXPECT_EQ(diag.at("knots").size(), 4u);
  EXPECT_GT(diag.at("gcv").get<double>(), 0.0);
  EXPECT_TRUE(diag.at("isse").is_number());
  EXPECT_EQ(diag.at("variant"), "fs2");
  EXPECT_TRUE(std::filesystem::exists(dir + "/coefficients.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/curves.csv"));
}

TEST(Cli, ConfigPrecedence) {
  const auto dir = fresh_dir("precedence");
  const auto cfg = fks::test::temp_file("cli_cfg.json",
                                        R"({"noise_sd": 0.2, "points": 12, "simulate": {"points": 14}})");
  auto r = fks_cli("simulate --config " + cfg + " --out " + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto echo = json::parse(r.out);
  EXPECT_EQ(echo["config"]["noise_sd"], 0.2);
  EXPECT_EQ(echo["config"]["points"], 14);
  EXPECT_EQ(echo["config"]["curves_per_group"], 50);

  r = fks_cli("simulate --config " + cfg + " --noise-sd 0.3 --out " + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  echo = json::parse(r.out);
  EXPECT_EQ(echo["config"]["noise_sd"], 0.3);
}

TEST(Cli, ThreadsFromEnvironment) {
  const auto dir = fresh_dir("threads");
  const auto data = simulate_small(dir);
  auto r = fks_cli("fit --data " + data + " --nbasis 6 --out " + dir, "FKS_THREADS=3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["config"]["threads"], 3);
  r = fks_cli("fit --data " + data + " --nbasis 6 --threads 2 --out " + dir, "FKS_THREADS=3");
  EXPECT_EQ(json::parse(r.out)["config"]["threads"], 2);
}

TEST(Cli, ErrorsCarryExitCodes) {
  const auto dir = fresh_dir("errors");
  auto r = fks_cli("fit --data " + dir + "/missing.csv --out " + dir);
  EXPECT_EQ(r.code, 3);
  auto err = json::parse(r.err);
  EXPECT_EQ(err["error"]["kind"], "IoError");
  EXPECT_EQ(err["error"]["exit_code"], 3);

  const auto cfg = fks::test::temp_file("cli_bad.json", R"({"no_such_key": 1})");
  r = fks_cli("simulate --config " + cfg + " --out " + dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "InvalidConfig");

  r = fks_cli("simulate --points abc --out " + dir);
  EXPECT_EQ(r.code, 2);
  r = fks_cli("bogus");
  EXPECT_EQ(r.code, 2);

  const auto data = simulate_small(dir);
  r = fks_cli("fit --data " + data + " --variant fs9 --out " + dir);
  EXPECT_EQ(r.code, 2);

  const auto constant = fks::test::temp_file("cli_const.csv", "t,a,b\n1,1,2\n2,1,3\n3,1,5\n");
  r = fks_cli("ingest --input " + constant + " --out " + dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "ZeroVariance");
}

TEST(Cli, IngestProducesUnitDomainDataset) {
  const auto dir = fresh_dir("ingest");
  const auto csv = fks::test::temp_file("cli_ingest.csv", "date,IT,ES\n2020-03-01,1,10\n2020-03-02,2,NA\n"
                                                          "2020-03-03,4,15\n2020-03-04,8,12\n");
  const auto r = fks_cli("ingest --input " + csv + " --max-missing 0.3 --out " + dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = fks::read_dataset(dir + "/dataset.csv");
  EXPECT_EQ(d.n_curves(), 2);
  EXPECT_EQ(d.lo, 0.0);
  EXPECT_EQ(d.hi, 1.0);
  const auto info = json::parse(slurp(dir + "/ingest.json"));
  EXPECT_EQ(info["times"]["count"], 4);
}

TEST(Cli, ClusterIsDeterministic) {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  const auto data = simulate_small(a);
  const std::string args = "cluster --data " + data + " --nbasis 8 --grid-size 20 --labels " + a + "/labels.csv";
  ASSERT_EQ(fks_cli(args + " --out " + a).code, 0);
  ASSERT_EQ(fks_cli(args + " --out " + b + " --threads 2").code, 0);
  // only the provenance header may differ (it records the thread count)
  auto body = [](const std::string& path) {
    std::istringstream in(slurp(path));
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.rfind("#", 0) != 0) out += line + "\n";
    }
    return out;
  };
  EXPECT_EQ(body(a + "/partition.csv"), body(b + "/partition.csv"));
  const auto ma = json::parse(slurp(a + "/metrics.json"));
  const auto mb = json::parse(slurp(b + "/metrics.json"));
  for (const char* key : {"adjusted_rand_index", "within", "knots", "elbow", "matches"}) {
    ASSERT_TRUE(ma.contains(key)) << key;
    EXPECT_EQ(ma.at(key), mb.at(key)) << key;
  }
}
