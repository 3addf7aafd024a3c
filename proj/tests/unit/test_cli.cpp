#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Result run_cli(const std::string& args) {
  const std::string cmd = std::string(NETMPC_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("netmpc_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, HelpListsSubcommandsAndFlags) {
  const Result r = run_cli("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"moments", "run", "sweep", "reproduce", "inspect", "preset"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
  const Result rr = run_cli("run --help");
  EXPECT_EQ(rr.code, 0);
  for (const char* s : {"--policy", "--umax", "--paths", "--seed", "--moments", "--no-stability"}) {
    EXPECT_NE(rr.out.find(s), std::string::npos) << s;
  }
}

TEST_F(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("run --preset four-dim --bogus").code, 1);
  EXPECT_EQ(run_cli("run --preset no-such-preset").code, 1);
  EXPECT_EQ(run_cli("reproduce fig99").code, 1);
}

TEST_F(CliTest, TooFewMomentSamplesIsRejected) {
  const Result r = run_cli("moments --preset four-dim --samples 10");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("sample count too small"), std::string::npos) << r.out;
}

TEST_F(CliTest, MomentsAreByteIdenticalAcrossRuns) {
  ASSERT_EQ(run_cli("moments --preset four-dim --samples 2000 --out " + path("a.mom")).code, 0);
  ASSERT_EQ(run_cli("moments --preset four-dim --samples 2000 --out " + path("b.mom")).code, 0);
  const std::string a = slurp(path("a.mom"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.mom")));
  const Result to_stdout = run_cli("moments --preset four-dim --samples 2000");
  EXPECT_EQ(to_stdout.code, 0);
  EXPECT_EQ(to_stdout.out, a);

  const Result ins = run_cli("inspect " + path("a.mom"));
  EXPECT_EQ(ins.code, 0);
  EXPECT_NE(ins.out.find("model_hash"), std::string::npos);
  EXPECT_NE(ins.out.find("samples 2000"), std::string::npos);
}

TEST_F(CliTest, RunIsReproducibleForFixedSeed) {
  ASSERT_EQ(run_cli("moments --preset four-dim --samples 2000 --out " + path("m.mom")).code, 0);
  const std::string args = "run --preset four-dim --paths 1 --steps 12 --seed 7 --moments " +
                           path("m.mom") + " --out ";
  ASSERT_EQ(run_cli(args + path("r1.csv")).code, 0);
  ASSERT_EQ(run_cli(args + path("r2.csv")).code, 0);
  const std::string a = slurp(path("r1.csv"));
  EXPECT_NE(a.find("msb"), std::string::npos);
  EXPECT_EQ(a, slurp(path("r2.csv")));
}

TEST_F(CliTest, MomentsForAnotherModelExitWithTwo) {
  ASSERT_EQ(run_cli("moments --preset fig12 --samples 2000 --out " + path("m3.mom")).code, 0);
  const Result r =
      run_cli("run --preset four-dim --paths 1 --steps 3 --moments " + path("m3.mom"));
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(CliTest, PresetListAndInspectConfig) {
  const Result list = run_cli("preset --list");
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("four-dim"), std::string::npos);
  EXPECT_NE(list.out.find("fig12"), std::string::npos);

  const Result printed = run_cli("preset four-dim");
  EXPECT_EQ(printed.code, 0);
  EXPECT_NE(printed.out.find("[system]"), std::string::npos) << printed.out;

  ASSERT_EQ(run_cli("preset four-dim --out " + path("c.cfg")).code, 0);
  const Result ins = run_cli("inspect " + path("c.cfg"));
  EXPECT_EQ(ins.code, 0) << ins.out;
  EXPECT_NE(ins.out.find("d=4"), std::string::npos) << ins.out;
  EXPECT_NE(ins.out.find("orthogonal dim 3"), std::string::npos) << ins.out;
}

}  // namespace
