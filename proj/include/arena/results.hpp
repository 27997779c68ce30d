#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "arena/config.hpp"

namespace arena {

struct PlayerResult {
  int slot = 0;
  std::string bot_name;  // filled in by aggregate()
  bool is_winner = false;
  bool is_crashed = false;
  std::int64_t building_score = 0;
  std::int64_t razing_score = 0;
  std::int64_t unit_score = 0;
  std::int64_t kill_score = 0;
  std::int64_t frame_count = 0;

  friend bool operator==(const PlayerResult&, const PlayerResult&) = default;
};

enum class Outcome { Decided, Draw, AllCrashed, TimedOut, Aborted };

std::string_view to_string(Outcome outcome);

struct GameResult {
  std::string game_name;
  std::optional<int> winner_slot;
  std::vector<PlayerResult> players;
  double wall_seconds = 0.0;
  Outcome outcome = Outcome::Draw;

  std::optional<std::string> winner_bot() const;
  std::int64_t frames() const;  // max frame_count over players

  friend bool operator==(const GameResult&, const GameResult&) = default;
};

// Parses one `<game_name>_result.json`. Throws Error{Protocol}.
PlayerResult parse_result_file(std::string_view text);

// Combines per-slot results into one GameResult, in this order:
//   timed_out                        -> TimedOut
//   every slot crashed               -> AllCrashed
//   exactly one slot left uncrashed  -> Decided, that slot wins
//   exactly one winner claim         -> Decided
//   no winner claim                  -> Draw
//   several winner claims            -> Error{Protocol}
// A slot counts as crashed when listed in crashed_slots or its file says so;
// claims made by crashed slots are ignored.
GameResult aggregate(const MatchSpec& spec, const std::map<int, std::optional<PlayerResult>>& per_slot,
                     const std::set<int>& crashed_slots, bool timed_out);

// GameResult stand-in for a match that never got to play.
GameResult aborted_result(const MatchSpec& spec, double wall_seconds);

enum class ReportFormat { Json, Csv };

// Deterministic report sorted by game_name. Throws Error{Io}.
std::string render_report(std::vector<GameResult> results, ReportFormat format);
void write_report(const std::vector<GameResult>& results, ReportFormat format, const std::filesystem::path& out);

}  // namespace arena
