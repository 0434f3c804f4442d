#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csipos/cli/app.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "csipos");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = csipos::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  fs::path cfg;
  void SetUp() override {
    dir = fs::temp_directory_path() / ("csipos_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    cfg = dir / "tiny.cfg";
    std::ofstream(cfg) << "# tiny run\nantennas = 8\ngrid_step_mm = 250\nepochs = 2\nbatch_size = 8\n";
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string d(const std::string& s) const { return (dir / s).string(); }
};

}  // namespace

TEST_F(Cli, SimulateWritesDatasetAndManifest) {
  const auto r = cli({"simulate", "--config", cfg.string(), "--out", d("sim")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = csipos::datastore::read_dataset(dir / "sim" / "dataset.csib");
  EXPECT_EQ(ds.size(), 36u);
  EXPECT_EQ(ds.n_antennas, 8u);
  const std::string manifest = slurp(dir / "sim" / "manifest.txt");
  EXPECT_NE(manifest.find("verb = simulate"), std::string::npos);
  EXPECT_NE(manifest.find("seed = 1"), std::string::npos);
  EXPECT_NE(manifest.find("config_fingerprint = "), std::string::npos);
  const auto resolved = csipos::datastore::parse_config(dir / "sim" / "run.cfg");
  EXPECT_EQ(resolved.antennas, 8u);
  EXPECT_EQ(resolved.grid_step_mm, 250.0);
  EXPECT_NE(slurp(dir / "sim" / "simulate.log").find("36 samples"), std::string::npos);
}

TEST_F(Cli, TrainEvalTransferLetters) {
  ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", d("sim")}).code, 0);
  const std::string data = d("sim/dataset.csib");
  auto r = cli({"train", "--config", cfg.string(), "--data", data, "--out", d("train"), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"model.csim", "history.csv", "test_errors.csv", "test_cdf.csv", "test_summary.csv", "train.log"}) {
    EXPECT_TRUE(fs::exists(dir / "train" / f)) << f;
  }
  EXPECT_NE(slurp(dir / "train" / "manifest.txt").find("seed = 3"), std::string::npos);
  const std::string model = d("train/model.csim");

  r = cli({"eval", "--config", cfg.string(), "--data", data, "--model", model, "--out", d("eval"), "--all"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("all: 36 samples"), std::string::npos) << r.out;

  r = cli({"transfer", "--config", cfg.string(), "--topology", "ula", "--model", model, "--out", d("tl"), "--budget", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("freeze boundary 8, budget 10"), std::string::npos) << r.out;

  r = cli({"letters", "--config", cfg.string(), "--data", data, "--model", model, "--out", d("letters"), "--set", "letters_text=HI"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "letters" / "letters_path.csv"));
  EXPECT_TRUE(fs::exists(dir / "letters" / "letters_summary.csv"));
}

TEST_F(Cli, EvalWithMismatchedShapesIsDataError) {
  ASSERT_EQ(cli({"train", "--config", cfg.string(), "--out", d("train")}).code, 0);
  const auto r = cli({"eval", "--config", cfg.string(), "--antennas", "16", "--model", d("train/model.csim"), "--out", d("eval")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("subsample"), std::string::npos) << r.err;
}

TEST_F(Cli, GradcheckPasses) {
  const auto r = cli({"gradcheck", "--out", d("gc")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "gc" / "gradcheck.csv").find("check,max_relative_error,checked"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"fly"}).code, 1);
  EXPECT_EQ(cli({"simulate"}).code, 1);  // --out missing
  EXPECT_EQ(cli({"simulate", "--out", d("x"), "--antennas", "12"}).code, 1);
  EXPECT_EQ(cli({"eval", "--out", d("x")}).code, 1);  // --model missing
  EXPECT_EQ(cli({"--version"}).code, 0);
}

TEST_F(Cli, ConfigErrors) {
  std::ofstream(dir / "bad.cfg") << "epochs = banana\n";
  auto r = cli({"simulate", "--config", d("bad.cfg"), "--out", d("x")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("epochs"), std::string::npos);
  r = cli({"simulate", "--config", cfg.string(), "--out", d("x"), "--set", "nonsense=1"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, CorruptDataIsDataError) {
  std::ofstream(dir / "junk.csib") << "not a dataset";
  const auto r = cli({"train", "--config", cfg.string(), "--data", d("junk.csib"), "--out", d("x")});
  EXPECT_EQ(r.code, 3);
}

#ifdef CSIPOS_CLI_PATH
TEST_F(Cli, BinaryExitCodes) {
  const std::string exe = CSIPOS_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("simulate --config " + cfg.string() + " --out " + d("bin")), 0);
  EXPECT_TRUE(fs::exists(dir / "bin" / "dataset.csib"));
  EXPECT_EQ(status("simulate"), 1);
  EXPECT_EQ(status("simulate --out " + d("bin2") + " --set epochs=banana"), 2);
}
#endif
