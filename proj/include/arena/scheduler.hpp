#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arena/config.hpp"
#include "arena/lifecycle.hpp"
#include "arena/ports.hpp"
#include "arena/registry.hpp"
#include "arena/results.hpp"
#include "arena/runtime.hpp"

namespace arena {

struct DeploymentPlan {
  std::vector<MatchSpec> matches;
  int max_concurrent = 4;
  double cpu_budget = 4.0;
  int retry_crashed = 0;
  std::uint64_t seed = 0;
};

// Throws Error{Validation}: bad limits, duplicate game names, or a match
// whose cost alone exceeds the budget.
void validate_plan(const DeploymentPlan& plan);

// One 1v1 match per unordered bot pair × map × repeat, named
// rr_<i>_<j>_<map-index>_<r>. Headful, timeout and limits come from `tmpl`.
DeploymentPlan plan_round_robin(const std::vector<BotMetadata>& bots, const std::vector<std::string>& maps,
                                int repeats, const MatchSpec& tmpl);

// YAML plan file: the match-spec keys (one match) and/or a `matches` list
// and/or a `round_robin` block {bots, maps, repeats} with `defaults`, plus
// max_concurrent, cpu_budget, retry_crashed and seed.
DeploymentPlan parse_plan(std::string_view text);

struct MatchReport {
  std::string planned_name;
  int attempts = 0;
  MatchPhase final_phase = MatchPhase::Aborted;
  GameResult result;  // from the final attempt
};

// Head-to-head tally for an unordered pair (first < second by name).
struct PairRecord {
  int first_wins = 0;
  int second_wins = 0;
  int other = 0;

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct SchedulerSample {
  Instant at{0};
  int active_matches = 0;
  double active_cost = 0.0;
};

struct DeploymentReport {
  std::vector<MatchReport> entries;  // plan order, one per planned match
  std::map<std::pair<std::string, std::string>, PairRecord> win_matrix;
  double wall_seconds = 0.0;
  std::vector<SchedulerSample> trace;

  std::vector<GameResult> final_results() const;
};

// Drives every planned match through the lifecycle with at most
// max_concurrent matches in flight and their summed cost within cpu_budget.
// Admission is FIFO in plan order, skipping matches that do not fit the
// remaining budget. Crashed matches are retried up to retry_crashed times
// as <name>_retry<K>; timeouts are final.
DeploymentReport run_plan(const DeploymentPlan& plan, Runtime& runtime, Clock& clock,
                          const std::filesystem::path& base_dir, PortAllocator& ports,
                          const LifecycleOptions& options = {});

std::map<std::pair<std::string, std::string>, PairRecord> win_matrix(const std::vector<GameResult>& results);

// Text table with bots sorted by name; cell (row, col) is wins-losses-other
// of the row bot against the column bot.
std::string summarize(const DeploymentReport& report);

}  // namespace arena
