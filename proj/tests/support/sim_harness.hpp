#pragma once

#include "arena/lifecycle.hpp"
#include "arena/ports.hpp"
#include "arena/sim_runtime.hpp"
#include "support/fixtures.hpp"

namespace arena::testing {

// Simulated runtime, clock, port pool and scratch base dir in one place.
struct SimHarness {
  explicit SimHarness(std::uint64_t seed = 1) : runtime(default_game_script(seed)), clock(runtime) {}

  VolumeLayout layout() const { return VolumeLayout(dir.path()); }

  MatchHandle begin(const MatchSpec& spec) {
    stage_inputs(dir.path(), spec);
    return begin_match(spec, layout(), ports, clock.now());
  }

  MatchState play(const MatchSpec& spec, const LifecycleOptions& options = {}) {
    auto h = begin(spec);
    return await_completion(h, runtime, clock, options);
  }

  // A container that runs for `seconds` and exits with `code` without
  // writing anything.
  void plan_crash(const std::string& game, int slot, double seconds, int code = 1) {
    runtime.set_plan(container_name(game, slot), {.run_duration_s = seconds, .exit_code = code});
  }

  TempDir dir;
  SimRuntime runtime;
  SimClock clock;
  SimPortAllocator ports;
};

// Every phase pair visited by a handle is a legal forward step.
inline bool history_is_legal(const std::vector<MatchPhase>& history) {
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (!is_legal_transition(history[i - 1], history[i])) return false;
  }
  return !history.empty() && history.front() == MatchPhase::Pending;
}

}  // namespace arena::testing
