#include <gtest/gtest.h>

#include "arena/error.hpp"
#include "arena/sim_runtime.hpp"
#include "support/fixtures.hpp"

namespace arena {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;
using State = ContainerStatus::State;

ContainerConfig config(const std::string& name, const std::filesystem::path& write_dir = {}) {
  ContainerConfig cfg;
  cfg.name = name;
  cfg.image = {"starcraft", "game"};
  cfg.labels = {{kGameLabel, "g"}, {kSlotLabel, "0"}};
  if (!write_dir.empty()) cfg.mounts.push_back({write_dir, mount_point::kWrite, false});
  return cfg;
}

TEST(SimRuntime, ContainerRunsForPlannedDuration) {
  SimRuntime rt;
  rt.set_plan("c", {.run_duration_s = 10, .exit_code = 3});
  auto h = rt.create(config("c"));
  EXPECT_EQ(rt.inspect(h).state, State::Created);
  rt.advance(2s);
  rt.start(h);
  EXPECT_EQ(rt.inspect(h), ContainerStatus::running(2000ms));
  rt.advance(9999ms);
  EXPECT_EQ(rt.inspect(h).state, State::Running);
  rt.advance(1ms);
  EXPECT_EQ(rt.inspect(h), ContainerStatus::exited(3));
}

TEST(SimRuntime, ErrorsMirrorDaemon) {
  SimRuntime rt;
  auto h = rt.create(config("c"));
  auto kind = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind([&] { rt.create(config("c")); }), ErrorKind::NameConflict);
  rt.start(h);
  EXPECT_EQ(kind([&] { rt.start(h); }), ErrorKind::AlreadyRunning);
  EXPECT_EQ(kind([&] { rt.remove(h); }), ErrorKind::StillRunning);
  EXPECT_EQ(kind([&] { rt.start({"nope", "nope"}); }), ErrorKind::NotFound);
  EXPECT_EQ(rt.inspect({"nope", "nope"}).state, State::NotFound);
  rt.set_known_images(std::set<std::string>{"other:tag"});
  EXPECT_EQ(kind([&] { rt.create(config("d")); }), ErrorKind::ImageMissing);
  rt.set_available(false);
  EXPECT_EQ(kind([&] { rt.ensure_network("n"); }), ErrorKind::RuntimeUnavailable);
}

TEST(SimRuntime, StopAndRemove) {
  SimRuntime rt;
  auto h = rt.create(config("c"));
  rt.start(h);
  rt.stop(h, 10);
  EXPECT_EQ(rt.inspect(h), ContainerStatus::exited(143));
  rt.stop(h, 10);
  rt.remove(h);
  rt.remove(h);
  EXPECT_EQ(rt.container_count(), 0u);
  EXPECT_TRUE(rt.list_by_label(kGameLabel, "g").empty());
}

TEST(SimRuntime, ScriptedFailures) {
  SimRuntime rt;
  rt.set_plan("bad_create", {.fail_create = true});
  rt.set_plan("bad_start", {.fail_start = true});
  EXPECT_THROW(rt.create(config("bad_create")), Error);
  EXPECT_EQ(rt.container_count(), 0u);
  auto h = rt.create(config("bad_start"));
  EXPECT_THROW(rt.start(h), Error);
  EXPECT_EQ(rt.inspect(h).state, State::Created);
}

TEST(SimRuntime, WritesFilesIntoMounts) {
  TempDir tmp;
  SimRuntime rt;
  const std::string w = mount_point::kWrite;
  rt.set_plan("c", {.run_duration_s = 5,
                    .files_to_write = {{w + "/early.txt", "E", 1.0},
                                       {w + "/sub/late.txt", "L", std::nullopt},
                                       {"/elsewhere/x", "X", std::nullopt},
                                       {w + "/../escape", "Y", std::nullopt}}});
  auto h = rt.create(config("c", tmp.path()));
  rt.start(h);
  rt.advance(1s);
  EXPECT_EQ(testing::read_file(tmp.path() / "early.txt"), "E");
  EXPECT_FALSE(std::filesystem::exists(tmp.path() / "sub" / "late.txt"));
  rt.advance(4s);
  EXPECT_EQ(testing::read_file(tmp.path() / "sub" / "late.txt"), "L");
  EXPECT_FALSE(std::filesystem::exists(tmp.path().parent_path() / "escape"));
}

TEST(SimRuntime, LabelQueriesAndNetworks) {
  SimRuntime rt;
  auto a = rt.create(config("a"));
  auto cfg = config("b");
  cfg.labels[kGameLabel] = "other";
  auto b = rt.create(cfg);
  EXPECT_EQ(rt.list_by_label(kGameLabel, "g"), std::vector<ContainerHandle>{a});
  EXPECT_EQ(rt.list_with_label(kGameLabel).size(), 2u);
  auto id = rt.ensure_network("arena_x");
  EXPECT_EQ(rt.ensure_network("arena_x"), id);
  EXPECT_EQ(rt.list_networks("arena_"), std::vector<std::string>{"arena_x"});
  rt.remove_network("arena_x");
  rt.remove_network("arena_x");
  EXPECT_TRUE(rt.list_networks("arena_").empty());
  (void)b;
}

TEST(SimRuntime, DeterministicAcrossRuns) {
  auto run = [] {
    SimRuntime rt(default_game_script(99));
    for (int i = 0; i < 3; ++i) {
      auto cfg = config("c" + std::to_string(i));
      cfg.env = {"GAME_NAME=g", "PLAYER_SLOT=" + std::to_string(i), "NUM_PLAYERS=3"};
      rt.start(rt.create(cfg));
    }
    rt.advance(120s);
    return rt.events();
  };
  auto first = run();
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, run());
}

TEST(SimRuntime, StatePersists) {
  TempDir tmp;
  SimRuntime rt;
  rt.set_plan("c", {.run_duration_s = 100});
  auto h = rt.create(config("c"));
  rt.start(h);
  rt.ensure_network("arena_n");
  rt.advance(10s);
  rt.save_state(tmp.path() / "s.json");

  SimRuntime back;
  back.load_state(tmp.path() / "s.json");
  EXPECT_EQ(back.now(), 10000ms);
  EXPECT_EQ(back.inspect(h).state, State::Running);
  EXPECT_EQ(back.list_networks("arena_"), std::vector<std::string>{"arena_n"});
  back.advance(90s);
  EXPECT_EQ(back.inspect(h).state, State::Exited);
}

TEST(DefaultGamePlan, AllSlotsAgreeOnOneWinner) {
  for (int n = 2; n <= 8; ++n) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      int winners = 0;
      double duration = -1;
      for (int slot = 0; slot < n; ++slot) {
        ContainerConfig cfg;
        cfg.env = {"GAME_NAME=g" + std::to_string(seed), "PLAYER_SLOT=" + std::to_string(slot),
                   "NUM_PLAYERS=" + std::to_string(n)};
        auto plan = default_game_plan(cfg, seed);
        if (duration < 0) duration = plan.run_duration_s;
        EXPECT_EQ(plan.run_duration_s, duration);
        for (const auto& f : plan.files_to_write) {
          if (f.bytes.find("\"is_winner\":true") != std::string::npos) ++winners;
        }
      }
      EXPECT_EQ(winners, 1) << n << " players, seed " << seed;
    }
  }
}

}  // namespace
}  // namespace arena
