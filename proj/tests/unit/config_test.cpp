#include <gtest/gtest.h>

#include <random>

#include "arena/config.hpp"
#include "arena/error.hpp"
#include "support/fixtures.hpp"

namespace arena {
namespace {

constexpr const char* kFourPlayer = R"(
game_name: ffa_1
map: sscai/(4)Python.scx
headful: true
timeout_s: 900
limits: {cpus: 1.5, memory_mib: 1024}
players:
  - {slot: 0, bot_name: Alpha, race: Terran, bot_file: Alpha.dll}
  - {slot: 1, bot_name: Beta, race: Zerg, bot_file: Beta.exe}
  - {slot: 2, bot_name: Gamma, race: Protoss, bot_file: Gamma.jar}
  - {slot: 3, bot_name: Delta, race: Random, bot_file: Delta.DLL}
)";

ErrorKind kind_of(std::string_view yaml) {
  try {
    parse_match_spec(yaml);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted:\n" << yaml;
  return ErrorKind::Io;
}

TEST(MatchSpecParse, ReadsEveryField) {
  auto spec = parse_match_spec(kFourPlayer);
  EXPECT_EQ(spec.game_name, "ffa_1");
  EXPECT_EQ(spec.map, "sscai/(4)Python.scx");
  EXPECT_TRUE(spec.headful);
  EXPECT_EQ(spec.timeout_s, 900);
  EXPECT_DOUBLE_EQ(spec.limits.cpus, 1.5);
  EXPECT_EQ(spec.limits.memory_mib, 1024);
  ASSERT_EQ(spec.players.size(), 4u);
  EXPECT_EQ(spec.players[1].race, Race::Zerg);
  EXPECT_EQ(spec.players[3].bot_file, "Delta.DLL");
  EXPECT_DOUBLE_EQ(spec.cost(), 6.0);
}

TEST(MatchSpecParse, Defaults) {
  auto spec = parse_match_spec(R"(
game_name: g
map: m.scx
players:
  - {slot: 0, bot_name: a, race: Terran, bot_file: a.dll}
  - {slot: 1, bot_name: b, race: Zerg, bot_file: b.dll}
)");
  EXPECT_FALSE(spec.headful);
  EXPECT_EQ(spec.timeout_s, kDefaultTimeoutSeconds);
  EXPECT_EQ(spec.limits, ResourceLimits{});
}

TEST(MatchSpecParse, MalformedYamlIsSyntaxError) {
  EXPECT_EQ(kind_of("game_name: [unclosed"), ErrorKind::Syntax);
}

TEST(MatchSpecParse, RejectsInvalidSpecs) {
  const std::string two = R"(
  - {slot: 0, bot_name: a, race: Terran, bot_file: a.dll}
  - {slot: 1, bot_name: b, race: Zerg, bot_file: b.dll}
)";
  const std::vector<std::string> bad = {
      "game_name: g\nmap: m.scx\nplayers:\n  - {slot: 0, bot_name: a, race: Terran, bot_file: a.dll}\n",
      "game_name: 'bad name'\nmap: m.scx\nplayers:" + two,
      "game_name: g\nmap: ../m.scx\nplayers:" + two,
      "game_name: g\nmap: /abs/m.scx\nplayers:" + two,
      "game_name: g\nmap: m.scx\ntimeout_s: 0\nplayers:" + two,
      "game_name: g\nmap: m.scx\nlimits: {cpus: 0}\nplayers:" + two,
      "game_name: g\nmap: m.scx\nlimits: {memory_mib: 16}\nplayers:" + two,
      "game_name: g\nmap: m.scx\nsurprise: 1\nplayers:" + two,
      "game_name: g\nmap: m.scx\nplayers:\n  - {slot: 0, bot_name: a, race: Terran, bot_file: a.dll}\n"
      "  - {slot: 0, bot_name: b, race: Zerg, bot_file: b.dll}\n",
      "game_name: g\nmap: m.scx\nplayers:\n  - {slot: 0, bot_name: a, race: Elf, bot_file: a.dll}\n"
      "  - {slot: 1, bot_name: b, race: Zerg, bot_file: b.dll}\n",
  };
  for (const auto& yaml : bad) EXPECT_EQ(kind_of(yaml), ErrorKind::Validation) << yaml;
}

TEST(MatchSpecParse, TooFewPlayersMessage) {
  try {
    parse_match_spec("game_name: g\nmap: m.scx\nplayers:\n  - {slot: 0, bot_name: a, race: Terran, bot_file: a.dll}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("players"), std::string::npos);
  }
}

TEST(MatchSpecRender, RoundTripsRandomSpecs) {
  std::mt19937 rng(7);
  const char* files[] = {"x.dll", "x.exe", "x.jar"};
  for (int iter = 0; iter < 300; ++iter) {
    MatchSpec spec;
    spec.game_name = "g" + std::to_string(iter);
    spec.map = "maps/(2)m" + std::to_string(rng() % 10) + ".scx";
    const int n = 2 + static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      spec.players.push_back({i, "b" + std::to_string(i), static_cast<Race>(rng() % 4), files[rng() % 3]});
    }
    spec.headful = rng() % 2;
    spec.timeout_s = 1 + static_cast<int>(rng() % 5000);
    spec.limits = {0.25 * static_cast<double>(1 + rng() % 16), 256 + static_cast<int>(rng() % 4096)};
    EXPECT_EQ(parse_match_spec(render_match_spec(spec)), spec);
  }
}

TEST(BotTypeDetection, ByExtensionCaseInsensitive) {
  EXPECT_EQ(detect_bot_type("a.dll"), BotType::BwapiModule);
  EXPECT_EQ(detect_bot_type("A.DLL"), BotType::BwapiModule);
  EXPECT_EQ(detect_bot_type("a.exe"), BotType::NativeClient);
  EXPECT_EQ(detect_bot_type("a.b.Jar"), BotType::JavaClient);
  for (const char* f : {"a.so", "a", "jar", "a.jar.txt"}) {
    EXPECT_THROW(detect_bot_type(f), Error) << f;
  }
}

TEST(ImageResolution, JavaBotsGetJavaLayer) {
  EXPECT_EQ(resolve_image(BotType::JavaClient, false).str(), "starcraft:java");
  EXPECT_EQ(resolve_image(BotType::BwapiModule, false).str(), "starcraft:game");
  EXPECT_EQ(resolve_image(BotType::NativeClient, true).str(), "starcraft:game");
  ImageDefaults custom{{"reg/sc", "g1"}, {"reg/sc", "j1"}};
  EXPECT_EQ(resolve_image(BotType::JavaClient, false, custom).str(), "reg/sc:j1");
}

TEST(CrossValidation, MapAndBotType) {
  auto spec = testing::make_spec("g", 2);
  EXPECT_NO_THROW(validate_cross(spec, {"m.scx"}));
  try {
    validate_cross(spec, {"other.scx"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MapNotFound);
  }
  spec.players[1].bot_file = "b.so";
  try {
    validate_cross(spec, {"m.scx"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedBotType);
  }
}

TEST(Identifier, Boundaries) {
  EXPECT_TRUE(is_identifier("a"));
  EXPECT_TRUE(is_identifier(std::string(64, 'z')));
  EXPECT_FALSE(is_identifier(std::string(65, 'z')));
  EXPECT_FALSE(is_identifier(""));
  EXPECT_FALSE(is_identifier("a/b"));
  EXPECT_FALSE(is_identifier("a.b"));
  EXPECT_TRUE(is_identifier("A-b_9"));
}

}  // namespace
}  // namespace arena
