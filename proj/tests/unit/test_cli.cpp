#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "fixture_scenario.hpp"
#include "stub_server.hpp"
#include "synthetic_prompts.hpp"

namespace t2ia {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "t2iattack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string default_config() { return std::string(T2IA_SOURCE_DIR) + "/configs/default.yaml"; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("t2ia-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& contents) const {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << contents;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string read(const std::string& p) { return testing::read_text_file(p); }
  static std::size_t data_rows(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) rows += !line.empty() && line[0] != '#';
    return rows - 1;  // header
  }

  fs::path dir_;
};

TEST_F(CliTest, AttackIsDeterministic) {
  const std::string input = write("in.txt", "a red ball on green grass\n");
  for (const char* out : {"a", "b"}) {
    const auto r = run_cli({"attack", "--config", default_config(), "--input", input, "--output",
                            path(out), "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"results/00001.json", "report.csv", "manifest.json"}) {
    EXPECT_EQ(read(path("a") + "/" + f), read(path("b") + "/" + f)) << f;
  }
  const auto doc = nlohmann::json::parse(read(path("a") + "/results/00001.json"));
  const auto manifest = nlohmann::json::parse(read(path("a") + "/manifest.json"));
  EXPECT_EQ(doc.at("manifest_digest"), manifest.at("digest"));
  EXPECT_EQ(doc.at("original_text"), "a red ball on green grass");
  EXPECT_EQ(manifest.at("seed"), 5);
  EXPECT_EQ(read(path("a") + "/report.csv").rfind("# manifest " + manifest.at("digest").get<std::string>(), 0), 0u);
}

TEST_F(CliTest, SeedChangesTheRun) {
  const std::string input = write("in.txt", "a small boat drifts near the old harbor\n");
  run_cli({"attack", "--config", default_config(), "--input", input, "--output", path("a"), "--seed", "1"});
  run_cli({"attack", "--config", default_config(), "--input", input, "--output", path("b"), "--seed", "2"});
  EXPECT_NE(read(path("a") + "/results/00001.json"), read(path("b") + "/results/00001.json"));
}

TEST_F(CliTest, MissingConfigExitsTwo) {
  const std::string input = write("in.txt", "a cat\n");
  const auto r = run_cli({"attack", "--config", path("nope.yaml"), "--input", input, "--output", path("o")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("nope.yaml"), std::string::npos);
  EXPECT_EQ(run_cli({"attack", "--input", input, "--output", path("o")}).code, cli::kExitUsage);
}

TEST_F(CliTest, HundredLinesGiveHundredResultsAndOneReport) {
  std::string lines;
  for (const auto& p : testing::planted_prompts(100, 100)) lines += p.text + "\n";
  const std::string input = write("in.txt", lines);
  const auto r = run_cli({"attack", "--config", default_config(), "--input", input, "--output",
                          path("o"), "--jobs", "2", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t results = 0;
  for (const auto& e : fs::directory_iterator(path("o") + "/results")) results += e.is_regular_file();
  EXPECT_EQ(results, 100u);
  EXPECT_TRUE(fs::exists(path("o") + "/results/00100.json"));
  std::size_t reports = 0;
  for (const auto& e : fs::directory_iterator(path("o"))) {
    reports += e.path().filename().string().rfind("report.", 0) == 0;
  }
  EXPECT_EQ(reports, 1u);
  const auto report = nlohmann::json::parse(read(path("o") + "/report.json"));
  EXPECT_EQ(report.at("rows").at(0).at("count"), 100);
}

TEST_F(CliTest, JobsDoNotChangeOutputs) {
  std::string lines;
  for (const auto& p : testing::planted_prompts(7, 6)) lines += p.text + "\n";
  const std::string input = write("in.txt", lines);
  run_cli({"attack", "--config", default_config(), "--input", input, "--output", path("a"), "--jobs", "1"});
  run_cli({"attack", "--config", default_config(), "--input", input, "--output", path("b"), "--jobs", "3"});
  EXPECT_EQ(read(path("a") + "/report.csv"), read(path("b") + "/report.csv"));
  EXPECT_EQ(read(path("a") + "/results/00006.json"), read(path("b") + "/results/00006.json"));
}

TEST_F(CliTest, SweepDefaultAndRestrictedRates) {
  const std::string input = write("in.txt", "a red ball on green grass\na dog runs on the beach\n");
  auto r = run_cli({"sweep", "--config", default_config(), "--input", input, "--output", path("full"),
                    "--objective", "mmd2,clip"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(read(path("full") + "/curves/mmd2-typo.csv")), 11u);
  EXPECT_EQ(data_rows(read(path("full") + "/curves/clip-typo.csv")), 11u);
  EXPECT_EQ(data_rows(read(path("full") + "/curves/random-typo.csv")), 11u);
  EXPECT_EQ(data_rows(read(path("full") + "/slopes.csv")), 2u);

  r = run_cli({"sweep", "--config", default_config(), "--input", input, "--output", path("short"),
               "--objective", "mmd2", "--rates", "0-80"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(read(path("short") + "/curves/mmd2-typo.csv")), 9u);
}

TEST_F(CliTest, SweepRejectsEmptyInputAndBadRates) {
  const std::string empty = write("empty.txt", "\n\n");
  EXPECT_EQ(run_cli({"sweep", "--config", default_config(), "--input", empty, "--output", path("o")}).code,
            cli::kExitUsage);
  const std::string input = write("in.txt", "a cat\n");
  for (const char* rates : {"0-120", "x", "50-10", "0-80:0"}) {
    EXPECT_EQ(run_cli({"sweep", "--config", default_config(), "--input", input, "--output",
                       path("o"), "--rates", rates})
                  .code,
              cli::kExitUsage)
        << rates;
  }
}

TEST_F(CliTest, RankListsKeywordFirst) {
  const auto p = testing::planted_prompt(3);
  const auto r = run_cli({"rank", "--config", default_config(), "--objective", "mmd2", p.text});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "rank\tindex\tword\tscore");
  EXPECT_NE(first.find("\t" + p.keyword + "\t"), std::string::npos) << r.out;
}

TEST_F(CliTest, RankSingleWordAndPunctuation) {
  const auto one = run_cli({"rank", "--config", default_config(), "ball"});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(std::count(one.out.begin(), one.out.end(), '\n'), 2);
  EXPECT_EQ(run_cli({"rank", "--config", default_config(), "?!..."}).code, cli::kExitUsage);
}

TEST_F(CliTest, HumanEval) {
  const std::string csv = write("r.csv",
                                "sample_id,annotator_id,N1,N2\n"
                                "1,a,1,3\n2,a,1,3\n3,a,4,2\n4,a,4,2\n5,a,4,2\n6,a,4,2\n"
                                "7,a,3,3\n8,a,3,3\n9,a,3,3\n10,a,3,3\n");
  const auto r = run_cli({"human-eval", csv});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.500000\n");
  const std::string excluded = write("x.csv", "sample_id,annotator_id,N1,N2\n1,a,1,5\n");
  EXPECT_EQ(run_cli({"human-eval", excluded}).code, cli::kExitUsage);
}

TEST_F(CliTest, UnreachableRemoteOracleExitsThree) {
  std::string url;
  {
    testing::StubServer server([](const testing::StubRequest&) { return testing::StubReply{}; });
    url = server.url();
  }
  const std::string config = write("remote.yaml", "objective: mmd2\noracle:\n  retry_cap: 0\n  timeout_seconds: 1\n");
  const std::string input = write("in.txt", "a cat on a mat\n");
  const auto r = run_cli({"attack", "--config", config, "--oracle", "remote:" + url, "--input",
                          input, "--output", path("o")});
  EXPECT_EQ(r.code, cli::kExitOracle);
  EXPECT_TRUE(fs::exists(path("o") + "/results/00001.json"));
  const auto doc = nlohmann::json::parse(read(path("o") + "/results/00001.json"));
  EXPECT_FALSE(doc.at("error").is_null());
}

TEST_F(CliTest, RemoteOracleReceivesBearerToken) {
  SyntheticOracle victim(testing::fixture_victim_spec(), 1);
  testing::StubServer server(testing::oracle_handler(victim, {8, 15, {"attack", "eval"}}));
  const std::string config = write("remote.yaml", "objective: mmd2\nn_images: 3\noracle:\n  retry_cap: 0\n");
  const std::string input = write("in.txt", "a red ball\n");
  ::setenv(cli::kTokenEnvVar, "tok123", 1);
  const auto r = run_cli({"attack", "--config", config, "--oracle", "remote:" + server.url(),
                          "--input", input, "--output", path("o")});
  ::unsetenv(cli::kTokenEnvVar);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& req : server.requests()) EXPECT_EQ(req.authorization, "Bearer tok123");
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"attack", "--config", default_config()}).code, cli::kExitUsage);
  const std::string input = write("in.txt", "a cat\n");
  EXPECT_EQ(run_cli({"attack", "--config", default_config(), "--input", input, "--output",
                     path("o"), "--objective", "fid"})
                .code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"attack", "--config", default_config(), "--input", input, "--output",
                     path("o"), "--format", "xml"})
                .code,
            cli::kExitUsage);
  const std::string punct = write("p.txt", "a cat\n!!!\n");
  EXPECT_EQ(run_cli({"attack", "--config", default_config(), "--input", punct, "--output", path("o")}).code,
            cli::kExitUsage);
}

TEST_F(CliTest, HelpAndVersion) {
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("attack"), std::string::npos);
  EXPECT_EQ(run_cli({"--version"}).code, 0);
}

TEST_F(CliTest, InstalledBinaryRuns) {
  const std::string cmd = std::string(T2IA_CLI_PATH) + " --version > " + path("v.txt");
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_FALSE(read(path("v.txt")).empty());
}

}  // namespace
}  // namespace t2ia
