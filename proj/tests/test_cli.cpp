#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "json.hpp"
#include "wmutate/sha256.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kCli = WMUTATE_CLI;
const std::string kCorpus = WMUTATE_CORPUS_DIR;

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("wmutate-cli-" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, MutateIsDeterministic) {
  const std::string in = kCorpus + "/fib.wasm";
  ASSERT_EQ(run("mutate -i " + in + " -o " + path("a.wasm") + " --seed 7"), 0);
  ASSERT_EQ(run("mutate -i " + in + " -o " + path("b.wasm") + " --seed 7"), 0);
  EXPECT_EQ(slurp(path("a.wasm")), slurp(path("b.wasm")));
  EXPECT_EQ(run("validate -i " + path("a.wasm")), 0);
}

TEST_F(Cli, StackAndLoop) {
  const std::string in = kCorpus + "/sort.wasm";
  EXPECT_EQ(run("stack -i " + in + " -o " + path("s.wasm") + " --seed 1 --count 25"), 0);
  EXPECT_EQ(run("validate -i " + path("s.wasm")), 0);
  EXPECT_EQ(run("loop -i " + in + " -o " + path("l.wasm") + " --seed 1 --deadline 60s --report " + path("l.json")),
            0);
  const auto j = nlohmann::json::parse(slurp(path("l.json")));
  EXPECT_TRUE(j["time_to_diff_instr_trace"].is_number());
}

TEST_F(Cli, CampaignSmoke) {
  const std::string in = kCorpus + "/collatz.wasm";
  ASSERT_EQ(run("campaign -i " + in + " --deadline 3s --seed 1 --report " + path("r.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_GE(j["population_size"].get<int>(), 1);
}

TEST_F(Cli, ValidateRejectsBrokenInput) {
  std::ofstream(path("broken.wasm")) << "not wasm";
  EXPECT_EQ(run("validate -i " + path("broken.wasm")), 2);
  EXPECT_EQ(run("mutate -i " + path("broken.wasm") + " -o " + path("x.wasm") + " --seed 1"), 2);
  EXPECT_FALSE(fs::exists(path("x.wasm")));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("mutate"), 1);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_EQ(run("mutate -i " + kCorpus + "/fib.wasm -o " + path("x.wasm") + " --enable nope"), 1);
  EXPECT_EQ(run("loop -i " + kCorpus + "/fib.wasm -o " + path("x.wasm") + " --deadline 5parsecs"), 1);
}

TEST_F(Cli, DeadlineExitCode) {
  EXPECT_EQ(run("loop -i " + kCorpus + "/fib.wasm -o " + path("x.wasm") + " --seed 1 --deadline 0s"), 3);
  EXPECT_FALSE(fs::exists(path("x.wasm")));
}

TEST_F(Cli, OmittedSeedIsPrinted) {
  const std::string cmd = kCli + " mutate -i " + kCorpus + "/fib.wasm -o " + path("a.wasm") + " 2>" + path("err");
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(path("err")).find("seed: "), std::string::npos);
}

TEST_F(Cli, TraceAndRules) {
  ASSERT_EQ(run("trace -i " + kCorpus + "/array_sum.wasm --instr-out " + path("i.txt") + " --mem-out " +
                path("m.txt")),
            0);
  EXPECT_EQ(slurp(path("i.txt")).rfind("[I] ", 0), 0u);
  EXPECT_NE(slurp(path("m.txt")).find("size="), std::string::npos);
  ASSERT_EQ(run("rules -o " + path("rules.json")), 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(path("rules.json"))).is_array());
}

}  // namespace
