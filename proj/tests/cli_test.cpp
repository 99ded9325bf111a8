#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result rcons(const std::string& args) {
  std::string cmd = std::string(RCONS_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string fixture(const std::string& name) {
  return std::string(RCONS_SOURCE_DIR) + "/fixtures/" + name + ".json";
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rcons-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out() const { return " --out " + dir_.string(); }
  std::string read(const std::string& file) const {
    std::ifstream in(dir_ / file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string write_scenario(const std::string& body) const {
    fs::create_directories(dir_);
    auto p = dir_ / "s.json";
    std::ofstream(p) << body;
    return p.string();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, FloodCheatExitsCleanWithBenefitFlagged) {
  auto r = rcons("run --scenario " + fixture("Fig1a") + out());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("benefit flagged"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "Fig1a.report.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "Fig1a.transcript.txt"));
}

TEST_F(Cli, AgreementViolationExitsTwo) {
  EXPECT_EQ(rcons("run --scenario " + fixture("Fig1b") + out()).code, 2);
}

TEST_F(Cli, RandomizedFakedReceiptExitsThree) {
  auto r = rcons("run --scenario " + fixture("CE2-Rand") + out());
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST_F(Cli, CounterexampleFixturesKeepConsensus) {
  for (const char* name : {"CE1", "CE2", "CE3", "ImpDemo"})
    EXPECT_EQ(rcons("run --scenario " + fixture(name) + out()).code, 0) << name;
}

TEST_F(Cli, MalformedScenarioExits64) {
  EXPECT_EQ(rcons("run --scenario " + write_scenario("{\"n\": 3") + out()).code, 64);
  EXPECT_EQ(rcons("run --scenario " + write_scenario("{\"n\": 3, \"types\": \"012 102 201\", \"x\": 0}") + out()).code,
            64);
  EXPECT_EQ(rcons("run --scenario /nonexistent.json" + out()).code, 64);
  EXPECT_EQ(rcons("run --scenario " + fixture("CE1") + " --format yaml" + out()).code, 64);
  EXPECT_EQ(rcons("legality --scenario " + fixture("Fig1a") + out()).code, 64);
}

TEST_F(Cli, HorizonExhaustionExitsFour) {
  auto r = rcons("run --scenario " + fixture("CE1") + " --horizon 2" + out());
  EXPECT_EQ(r.code, 4) << r.out;
}

TEST_F(Cli, SameSeedSameTranscript) {
  auto a = rcons("run --scenario " + fixture("CE2-Rand") + " --seed 7" + out());
  auto t1 = read("CE2-Rand.transcript.txt");
  auto b = rcons("run --scenario " + fixture("CE2-Rand") + " --seed 7" + out());
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(t1, read("CE2-Rand.transcript.txt"));
  EXPECT_NE(t1.find("seed 7"), std::string::npos);
}

TEST_F(Cli, StructuredReportIsJson) {
  auto r = rcons("run --scenario " + fixture("CE2") + " --format structured" + out());
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.front(), '{');
  EXPECT_NE(r.out.find("\"digest\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "CE2.report.json"));
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  std::string cmd = "env RCONS_OUT_DIR=" + dir_.string() + " " + RCONS_CLI_PATH +
                    " run --scenario " + fixture("CE2") + " > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "CE2.report.txt"));
}

TEST_F(Cli, SweepOutputDoesNotDependOnJobs) {
  auto s = write_scenario(R"({"name": "tiny", "variant": "NewEpoch2", "n": 3, "declared_f": 1,
                              "types": "012 102 201", "pattern": "enumerate",
                              "sweep": {"crash_round_bound": 3}})");
  auto one = rcons("sweep --scenario " + s + " --catalog all --max-round 2 --jobs 1" + out());
  auto three = rcons("sweep --scenario " + s + " --catalog all --max-round 2 --jobs 3" + out());
  EXPECT_EQ(one.code, 0);
  EXPECT_EQ(one.out, three.out);
  EXPECT_NE(one.out.find("not falsified"), std::string::npos);
}

TEST_F(Cli, EnumerateDictatorAndLegality) {
  auto s = write_scenario(R"({"name": "tiny", "n": 3, "declared_f": 1, "types": "012 102 201",
                              "pattern": "enumerate", "sweep": {"crash_round_bound": 3}})");
  auto r = rcons("run --scenario " + s + out());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("failing 0"), std::string::npos);
  auto d = rcons("dictator --scenario " + s + out());
  EXPECT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("without dictator 0"), std::string::npos);
  auto l = rcons("legality --scenario " + fixture("CE2") + out());
  EXPECT_EQ(l.code, 0) << l.out;
  EXPECT_NE(l.out.find("legal within bounds"), std::string::npos);
  auto b = rcons("benefit --scenario " + fixture("CE2") + out());
  EXPECT_NE(b.out.find("beneficial"), std::string::npos);
}

TEST_F(Cli, FixturesList) {
  auto r = rcons("fixtures list");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "Fig1a\nFig1b\nFig1c\nFig1d\nCE1\nCE2\nCE2-Rand\nCE3\nImpDemo\n");
}
