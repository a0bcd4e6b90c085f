// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hotstreak/io.hpp"

namespace {

namespace fs = std::filesystem;
using hotstreak::io::Json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hotstreak_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(HOTSTREAK_CLI) + " " + args + " >" + path("stdout.txt") + " 2>" +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void synth(const std::string& extra) {
    ASSERT_EQ(run("synth --users 12 --n-tweets 300 --streak-len 30 --seed 5 -o " + path("c.jsonl") +
                  " --truth-out " + path("t.jsonl") + " " + extra),
              0)
        << read("stderr.txt");
  }

  fs::path dir_;
};

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

TEST_F(Cli, AlphaZeroIsUsageError) {
  synth("");
  EXPECT_EQ(run("segment -i " + path("c.jsonl") + " --alpha 0"), 2);
}

TEST_F(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run("streaks -i x --bogus"), 2); }

TEST_F(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(run(""), 2); }

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST_F(Cli, MissingInputIsDataError) { EXPECT_EQ(run("segment -i " + path("absent.jsonl")), 1); }

TEST_F(Cli, PerFollowerWithoutSnapshotsIsUsageError) {
  synth("");
  EXPECT_EQ(run("clustered -i " + path("c.jsonl") + " --normalize-per-follower"), 2);
}

TEST_F(Cli, EmptyInputGivesEmptyTable) {
  std::ofstream(path("empty.jsonl")).close();
  ASSERT_EQ(run("streaks -i " + path("empty.jsonl") + " -o " + path("r.json")), 0);
  const auto r = Json::parse(read("r.json"));
  EXPECT_TRUE(r["tables"]["profiles"].empty());
  EXPECT_TRUE(r["tables"]["streaks"].empty());
}

TEST_F(Cli, SynthWritesOneRowPerUser) {
  synth("");
  EXPECT_EQ(count_lines(read("c.jsonl")), 12u);
  EXPECT_EQ(count_lines(read("t.jsonl")), 12u);
}

TEST_F(Cli, SynthIsSeedDeterministic) {
  synth("--with-content --with-retweeters");
  const auto first = read("c.jsonl");
  synth("--with-content --with-retweeters");
  EXPECT_EQ(read("c.jsonl"), first);
}

TEST_F(Cli, ConstantCareerGivesOneSegment) {
  std::ofstream out(path("flat.jsonl"));
  for (int u = 0; u < 3; ++u) {
    Json j{{"format_version", 1}, {"user_id", "u" + std::to_string(u)}, {"tweets", Json::array()}};
    for (int i = 0; i < 20; ++i) j["tweets"].push_back({{"ts", 1000 + i}, {"rt", 4}});
    out << j.dump() << '\n';
  }
  out.close();
  ASSERT_EQ(run("segment -i " + path("flat.jsonl") + " -o " + path("r.json")), 0) << read("stderr.txt");
  const auto rows = Json::parse(read("r.json"))["tables"]["segments"];
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_EQ(row["num_segments"], 1);
}

TEST_F(Cli, ReportsAreByteIdenticalAcrossRunsAndWorkers) {
  synth("--with-content --with-retweeters --with-activity --followers --snapshots-out " + path("s.csv"));
  const std::string in = " -i " + path("c.jsonl");
  const std::vector<std::string> commands = {
      "segment" + in,
      "streaks" + in + " --shuffle-seeds 3 --truth " + path("t.jsonl"),
      "clustered" + in + " --shuffle-seeds 3 --snapshots " + path("s.csv"),
      "windows" + in + " --shuffle-seeds 2 --snapshots " + path("s.csv"),
  };
  for (const auto& cmd : commands) {
    ASSERT_EQ(run(cmd + " --seed 9 --workers 1 -o " + path("r.out")), 0) << cmd << read("stderr.txt");
    const auto first = read("r.out");
    ASSERT_EQ(run(cmd + " --seed 9 --workers 1 -o " + path("r.out")), 0) << cmd;
    EXPECT_EQ(read("r.out"), first) << cmd;
    ASSERT_EQ(run(cmd + " --seed 9 --workers 3 -o " + path("r.out")), 0) << cmd;
    auto tables = [](const std::string& s) { return Json::parse(s)["tables"]; };
    EXPECT_EQ(tables(read("r.out")), tables(first)) << cmd;
  }
}

TEST_F(Cli, ConfigEchoesInvocation) {
  synth("");
  ASSERT_EQ(run("segment -i " + path("c.jsonl") + " --alpha 2.5 -o " + path("r.json")), 0);
  const auto cfg = Json::parse(read("r.json"))["config"];
  const std::vector<std::string> argv = {"segment", "-i", path("c.jsonl"), "--alpha", "2.5", "-o", path("r.json")};
  EXPECT_EQ(cfg["argv"].get<std::vector<std::string>>(), argv);
  EXPECT_EQ(cfg["options"]["--alpha"], "2.5");
}

TEST_F(Cli, CsvFormatCarriesVersionHeader) {
  synth("");
  ASSERT_EQ(run("segment -i " + path("c.jsonl") + " --format csv -o " + path("r.csv")), 0);
  const auto text = read("r.csv");
  EXPECT_EQ(text.rfind("# tool=hotstreak version=", 0), 0u);
  EXPECT_NE(text.find("format_version=1"), std::string::npos);
  EXPECT_NE(text.find("# table=segments"), std::string::npos);
}

TEST_F(Cli, PipelineRunsEndToEndAndModelReloads) {
  ASSERT_EQ(run("synth --users 30 --n-tweets 600 --streak-len 80 --seed 2 --with-content --with-retweeters "
                "--with-activity --followers --media-delta 0.4 -o " +
                path("c.jsonl") + " --snapshots-out " + path("s.csv")),
            0);
  ASSERT_EQ(run("classify -i " + path("c.jsonl") + " --snapshots " + path("s.csv") +
                " --min-len 11 --folds 5 --model-out " + path("m.json") + " -o " + path("r.json")),
            0)
      << read("stderr.txt");
  const auto r = Json::parse(read("r.json"));
  EXPECT_EQ(r["tables"]["cv_summary"].size(), 3u);
  const auto model = hotstreak::io::model_from_json(Json::parse(read("m.json")));
  EXPECT_EQ(model.feature_names.size(), 15u);
}

}  // namespace
