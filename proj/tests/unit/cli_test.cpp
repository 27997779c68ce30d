#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include <json.hpp>

#include "arena/cli.hpp"
#include "arena/digest.hpp"
#include "arena/fake_registry.hpp"
#include "support/fixtures.hpp"

namespace arena {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { testing::write_file(tmp.path() / "maps" / "m.scx", "map"); }

  CliRun cli(std::vector<std::string> args) {
    std::vector<std::string> full = {"--base-dir", tmp.path().string(), "--runtime", "sim", "--log-level", "off"};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code = run_cli(full, out, err);
    return {code, out.str(), err.str()};
  }

  static std::vector<int> vnc_ports(const std::string& text) {
    std::vector<int> ports;
    std::regex line(R"(VNC: slot (\d+) → localhost:(\d+))");
    for (std::sregex_iterator it(text.begin(), text.end(), line), end; it != end; ++it) {
      ports.push_back(std::stoi((*it)[2]));
    }
    return ports;
  }

  testing::TempDir tmp;
};

TEST_F(CliTest, PlayPrintsResult) {
  auto r = cli({"play", "--bot", "A", "--bot", "B", "--map", "m.scx"});
  EXPECT_EQ(r.code, kExitFinished) << r.err;
  EXPECT_NE(r.out.find("state: Finished"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("outcome: Decided"), std::string::npos);
  EXPECT_NE(r.out.find("winner: slot "), std::string::npos);
  EXPECT_TRUE(vnc_ports(r.out).empty());
}

TEST_F(CliTest, PlayJsonOutput) {
  auto r = cli({"--json", "play", "--bot", "A", "--bot", "B", "--bot", "C", "--map", "m.scx", "--game-name", "g1"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["game_name"], "g1");
  EXPECT_EQ(j["state"], "Finished");
  EXPECT_EQ(j["players"].size(), 3u);
  EXPECT_TRUE(j["vnc_ports"].is_null());
}

TEST_F(CliTest, HeadfulPrintsDistinctPorts) {
  auto r = cli({"--vnc-base", "6100", "play", "--headful", "--bot", "A", "--bot", "B", "--bot", "C", "--bot", "D",
                "--map", "m.scx"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto ports = vnc_ports(r.out);
  ASSERT_EQ(ports.size(), 4u);
  EXPECT_EQ(std::set<int>(ports.begin(), ports.end()).size(), 4u);
  for (int p : ports) EXPECT_GE(p, 6100);
}

TEST_F(CliTest, DetachedMatchesKeepPortsAcrossInvocations) {
  auto first = cli({"play", "--detach", "--headful", "--bot", "A", "--bot", "B", "--map", "m.scx"});
  ASSERT_EQ(first.code, 0) << first.err;
  auto second = cli({"play", "--detach", "--headful", "--bot", "C", "--bot", "D", "--map", "m.scx"});
  ASSERT_EQ(second.code, 0) << second.err;
  auto a = vnc_ports(first.out), b = vnc_ports(second.out);
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(b.size(), 2u);
  for (int p : b) EXPECT_EQ(std::count(a.begin(), a.end(), p), 0) << p;

  auto status = cli({"status"});
  EXPECT_NE(status.out.find("4 containers"), std::string::npos) << status.out;
  auto clean = cli({"clean"});
  EXPECT_NE(clean.out.find("4 removed, 2 networks pruned"), std::string::npos) << clean.out;
  EXPECT_NE(cli({"clean"}).out.find("0 removed, 0 networks pruned"), std::string::npos);
  EXPECT_NE(cli({"status"}).out.find("0 containers"), std::string::npos);
}

TEST_F(CliTest, PlayFromSpecFile) {
  auto spec = testing::make_spec("fromfile", 2);
  testing::write_file(tmp.path() / "spec.yaml", render_match_spec(spec));
  auto r = cli({"play", (tmp.path() / "spec.yaml").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("game: fromfile"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({"play", "--bot", "A"}).code, kExitError);
  EXPECT_EQ(cli({"play", "--bot", "A", "--bot", "B"}).code, kExitError);
  auto missing_map = cli({"play", "--bot", "A", "--bot", "B", "--map", "nope.scx"});
  EXPECT_EQ(missing_map.code, kExitError);
  EXPECT_NE(missing_map.err.find("nope.scx"), std::string::npos) << missing_map.err;
  EXPECT_EQ(cli({"--runtime", "podman", "status"}).code, kExitError);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitError);
  EXPECT_EQ(cli({"play", "--bot", "a/b", "--bot", "B", "--map", "m.scx"}).code, kExitError);
}

TEST_F(CliTest, DeployWritesReports) {
  testing::write_file(tmp.path() / "plan.yaml", R"(
max_concurrent: 2
cpu_budget: 4
seed: 11
round_robin:
  bots: [{bot_name: A}, {bot_name: B}, {bot_name: C}]
  maps: [m.scx]
  repeats: 2
)");
  auto out_dir = tmp.path() / "out";
  auto r = cli({"deploy", (tmp.path() / "plan.yaml").string(), "--out", out_dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("6 matches"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.rfind("bot ", 0), 0u);
  auto report = json::parse(testing::read_file(out_dir / "report.json"));
  EXPECT_EQ(report.size(), 6u);
  auto csv = testing::read_file(out_dir / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);

  auto again = tmp.path() / "out2";
  cli({"deploy", (tmp.path() / "plan.yaml").string(), "--out", again.string()});
  EXPECT_EQ(testing::read_file(again / "report.json"), testing::read_file(out_dir / "report.json"));
}

TEST_F(CliTest, BotsListAndFetch) {
  FakeRegistry registry;
  registry.add_bot("Alpha", Race::Zerg, BotType::BwapiModule, "alpha-bytes");
  auto url = registry.url();
  auto list = cli({"--registry-url", url, "bots", "list"});
  ASSERT_EQ(list.code, 0) << list.err;
  EXPECT_NE(list.out.find("Alpha\tZerg\tdll\t" + sha256_hex("alpha-bytes")), std::string::npos) << list.out;

  auto fetch = cli({"--registry-url", url, "bots", "fetch", "Alpha"});
  ASSERT_EQ(fetch.code, 0) << fetch.err;
  EXPECT_EQ(testing::read_file(tmp.path() / "bots" / "Alpha" / "Alpha.dll"), "alpha-bytes");
  EXPECT_EQ(cli({"--registry-url", url, "bots", "fetch", "Nobody"}).code, 1);
  EXPECT_EQ(cli({"--registry-url", url, "bots", "fetch"}).code, kExitError);

  registry.reset_hits();
  cli({"--registry-url", url, "bots", "fetch", "Alpha"});
  EXPECT_EQ(registry.binary_hits(), 0u);
}

}  // namespace
}  // namespace arena
