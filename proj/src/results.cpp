#include "arena/results.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "arena/error.hpp"

namespace arena {

using json = nlohmann::json;

namespace {

[[noreturn]] void protocol(const std::string& what) { throw Error(ErrorKind::Protocol, what); }

std::int64_t non_negative_int(const json& obj, const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) protocol(fmt::format("result missing '{}'", key));
    return 0;
  }
  if (!it->is_number_integer()) protocol(fmt::format("result field '{}' must be an integer", key));
  auto v = it->get<std::int64_t>();
  if (v < 0) protocol(fmt::format("result field '{}' must be ≥ 0", key));
  return v;
}

bool boolean(const json& obj, const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) protocol(fmt::format("result missing '{}'", key));
    return false;
  }
  if (!it->is_boolean()) protocol(fmt::format("result field '{}' must be a boolean", key));
  return it->get<bool>();
}

json player_json(const PlayerResult& p) {
  return {{"slot", p.slot},
          {"bot_name", p.bot_name},
          {"is_winner", p.is_winner},
          {"is_crashed", p.is_crashed},
          {"frame_count", p.frame_count},
          {"building_score", p.building_score},
          {"razing_score", p.razing_score},
          {"unit_score", p.unit_score},
          {"kill_score", p.kill_score}};
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Decided: return "Decided";
    case Outcome::Draw: return "Draw";
    case Outcome::AllCrashed: return "AllCrashed";
    case Outcome::TimedOut: return "TimedOut";
    case Outcome::Aborted: return "Aborted";
  }
  return "Draw";
}

std::optional<std::string> GameResult::winner_bot() const {
  if (!winner_slot) return std::nullopt;
  for (const auto& p : players) {
    if (p.slot == *winner_slot) return p.bot_name;
  }
  return std::nullopt;
}

std::int64_t GameResult::frames() const {
  std::int64_t frames = 0;
  for (const auto& p : players) frames = std::max(frames, p.frame_count);
  return frames;
}

PlayerResult parse_result_file(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    protocol(std::string("result file is not JSON: ") + e.what());
  }
  if (!doc.is_object()) protocol("result file must hold a JSON object");
  PlayerResult r;
  r.slot = static_cast<int>(non_negative_int(doc, "slot", true));
  r.is_winner = boolean(doc, "is_winner", true);
  // Wrappers in the wild omit is_crashed on clean games; absent means false.
  r.is_crashed = boolean(doc, "is_crashed", false);
  r.frame_count = non_negative_int(doc, "frame_count", true);
  r.building_score = non_negative_int(doc, "building_score", false);
  r.razing_score = non_negative_int(doc, "razing_score", false);
  r.unit_score = non_negative_int(doc, "unit_score", false);
  r.kill_score = non_negative_int(doc, "kill_score", false);
  if (r.is_winner && r.is_crashed) protocol("result claims both winner and crashed");
  return r;
}

GameResult aggregate(const MatchSpec& spec, const std::map<int, std::optional<PlayerResult>>& per_slot,
                     const std::set<int>& crashed_slots, bool timed_out) {
  const int n = static_cast<int>(spec.players.size());
  for (const auto& [slot, r] : per_slot) {
    if (slot < 0 || slot >= n) protocol(fmt::format("result for slot {} outside 0..{}", slot, n - 1));
    if (r && r->slot != slot) protocol(fmt::format("result file for slot {} says slot {}", slot, r->slot));
  }

  GameResult result;
  result.game_name = spec.game_name;
  std::set<int> crashed;
  for (int s : crashed_slots) {
    if (s < 0 || s >= n) protocol(fmt::format("crashed slot {} outside 0..{}", s, n - 1));
    crashed.insert(s);
  }
  for (const auto& player : spec.players) {
    PlayerResult p;
    if (auto it = per_slot.find(player.slot); it != per_slot.end() && it->second) p = *it->second;
    p.slot = player.slot;
    p.bot_name = player.bot_name;
    if (p.is_crashed) crashed.insert(p.slot);
    if (crashed.contains(p.slot)) {
      p.is_crashed = true;
      p.is_winner = false;
    }
    result.players.push_back(p);
  }

  auto crown = [&](int slot) {
    result.outcome = Outcome::Decided;
    result.winner_slot = slot;
    for (auto& p : result.players) p.is_winner = p.slot == slot;
  };
  auto clear_claims = [&] {
    for (auto& p : result.players) p.is_winner = false;
  };

  if (timed_out) {
    result.outcome = Outcome::TimedOut;
    clear_claims();
    return result;
  }
  if (static_cast<int>(crashed.size()) == n) {
    result.outcome = Outcome::AllCrashed;
    return result;
  }
  if (static_cast<int>(crashed.size()) == n - 1) {
    for (const auto& p : result.players) {
      if (!p.is_crashed) crown(p.slot);
    }
    return result;
  }
  std::vector<int> claims;
  for (const auto& p : result.players) {
    if (p.is_winner) claims.push_back(p.slot);
  }
  if (claims.size() > 1) protocol(fmt::format("{} players claim the win in {}", claims.size(), spec.game_name));
  if (claims.size() == 1) {
    crown(claims.front());
  } else {
    result.outcome = Outcome::Draw;
  }
  return result;
}

GameResult aborted_result(const MatchSpec& spec, double wall_seconds) {
  GameResult r;
  r.game_name = spec.game_name;
  r.outcome = Outcome::Aborted;
  r.wall_seconds = wall_seconds;
  for (const auto& player : spec.players) {
    PlayerResult p;
    p.slot = player.slot;
    p.bot_name = player.bot_name;
    r.players.push_back(p);
  }
  return r;
}

std::string render_report(std::vector<GameResult> results, ReportFormat format) {
  std::stable_sort(results.begin(), results.end(),
                   [](const GameResult& a, const GameResult& b) { return a.game_name < b.game_name; });
  if (format == ReportFormat::Csv) {
    std::string out = "game_name,outcome,winner_slot,winner_bot,wall_seconds,frames\n";
    for (const auto& r : results) {
      out += fmt::format("{},{},{},{},{:.3f},{}\n", r.game_name, to_string(r.outcome),
                         r.winner_slot ? std::to_string(*r.winner_slot) : std::string(),
                         r.winner_bot().value_or(""), r.wall_seconds, r.frames());
    }
    return out;
  }
  json doc = json::array();
  for (const auto& r : results) {
    json players = json::array();
    for (const auto& p : r.players) players.push_back(player_json(p));
    doc.push_back({{"game_name", r.game_name},
                   {"outcome", std::string(to_string(r.outcome))},
                   {"winner_slot", r.winner_slot ? json(*r.winner_slot) : json(nullptr)},
                   {"winner_bot", r.winner_bot() ? json(*r.winner_bot()) : json(nullptr)},
                   {"wall_seconds", r.wall_seconds},
                   {"frames", r.frames()},
                   {"players", players}});
  }
  return doc.dump(2) + "\n";
}

void write_report(const std::vector<GameResult>& results, ReportFormat format, const std::filesystem::path& out) {
  auto text = render_report(results, format);
  std::error_code ec;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path(), ec);
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  file << text;
  file.flush();
  if (!file) throw Error(ErrorKind::Io, "cannot write report " + out.string());
}

}  // namespace arena
