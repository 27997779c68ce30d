#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arena/error.hpp"
#include "arena/results.hpp"
#include "support/fixtures.hpp"

namespace arena::testing {

// What a slot reported at the end of a match.
enum class Claim { NoFile, Lost, Won };

struct Scenario {
  int players = 0;
  std::vector<bool> crashed;  // known dead by the supervisor
  std::vector<Claim> claims;
  bool timed_out = false;
};

enum class Expected { Decided, Draw, AllCrashed, TimedOut, Conflict };

struct Verdict {
  Expected kind = Expected::Draw;
  std::optional<int> winner;
};

// Written as a survivor count over slots rather than following the library's
// branch order: survivors are uncrashed slots, a lone survivor wins outright,
// otherwise survivors' win claims decide.
inline Verdict judge(const Scenario& s) {
  if (s.timed_out) return {Expected::TimedOut, std::nullopt};
  std::vector<int> survivors;
  for (int i = 0; i < s.players; ++i) {
    if (!s.crashed[i]) survivors.push_back(i);
  }
  if (survivors.empty()) return {Expected::AllCrashed, std::nullopt};
  if (survivors.size() == 1) return {Expected::Decided, survivors.front()};
  std::vector<int> claimers;
  for (int i : survivors) {
    if (s.claims[i] == Claim::Won) claimers.push_back(i);
  }
  switch (claimers.size()) {
    case 0: return {Expected::Draw, std::nullopt};
    case 1: return {Expected::Decided, claimers.front()};
    default: return {Expected::Conflict, std::nullopt};
  }
}

// Every (crash set, claim vector, timeout flag) for `players` slots.
inline std::vector<Scenario> enumerate_scenarios(int players) {
  std::vector<Scenario> out;
  int claim_combos = 1;
  for (int i = 0; i < players; ++i) claim_combos *= 3;
  for (int timeout = 0; timeout < 2; ++timeout) {
    for (int mask = 0; mask < (1 << players); ++mask) {
      for (int c = 0; c < claim_combos; ++c) {
        Scenario s;
        s.players = players;
        s.timed_out = timeout == 1;
        int rest = c;
        for (int i = 0; i < players; ++i) {
          s.crashed.push_back((mask >> i) & 1);
          s.claims.push_back(static_cast<Claim>(rest % 3));
          rest /= 3;
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

// Feeds a scenario to aggregate() and reports whether it agrees with judge().
// `why` gets a description of the first disagreement.
inline bool aggregate_agrees(const Scenario& s, std::string* why = nullptr) {
  auto spec = make_spec("oracle", s.players);
  std::map<int, std::optional<PlayerResult>> per_slot;
  std::set<int> crashed;
  for (int i = 0; i < s.players; ++i) {
    if (s.crashed[i]) crashed.insert(i);
    if (s.claims[i] == Claim::NoFile) {
      per_slot[i] = std::nullopt;
    } else {
      PlayerResult r;
      r.slot = i;
      r.is_winner = s.claims[i] == Claim::Won;
      r.frame_count = 100 + i;
      per_slot[i] = r;
    }
  }
  const auto want = judge(s);
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  GameResult got;
  try {
    got = aggregate(spec, per_slot, crashed, s.timed_out);
  } catch (const Error& e) {
    if (want.kind == Expected::Conflict && e.kind() == ErrorKind::Protocol) return true;
    return fail(std::string("unexpected error ") + e.what());
  }
  if (want.kind == Expected::Conflict) return fail("expected a protocol error");
  const Outcome expected_outcome = [&] {
    switch (want.kind) {
      case Expected::Decided: return Outcome::Decided;
      case Expected::Draw: return Outcome::Draw;
      case Expected::AllCrashed: return Outcome::AllCrashed;
      default: return Outcome::TimedOut;
    }
  }();
  if (got.outcome != expected_outcome) return fail("outcome " + std::string(to_string(got.outcome)));
  if (got.winner_slot != want.winner) return fail("winner slot differs");
  if (static_cast<int>(got.players.size()) != s.players) return fail("player count differs");
  int flagged = 0;
  for (const auto& p : got.players) {
    if (p.is_winner) ++flagged;
    if (p.is_winner && p.slot != want.winner) return fail("wrong player flagged as winner");
    if (p.is_crashed != static_cast<bool>(s.crashed[p.slot])) return fail("crash flag differs");
  }
  if (flagged != (want.winner ? 1 : 0)) return fail("winner flag count differs");
  return true;
}

}  // namespace arena::testing
