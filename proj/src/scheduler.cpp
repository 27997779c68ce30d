#include "arena/scheduler.hpp"

#include <algorithm>
#include <deque>
#include <list>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "arena/error.hpp"
#include "spec_yaml.hpp"

namespace arena {

namespace {

constexpr double kBudgetEpsilon = 1e-9;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::Validation, what); }

template <typename T>
T plan_scalar(const YAML::Node& node, const char* field) {
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    invalid(fmt::format("{}: wrong type", field));
  }
}

}  // namespace

void validate_plan(const DeploymentPlan& plan) {
  if (plan.max_concurrent < 1) invalid("max_concurrent: must be ≥ 1");
  if (!(plan.cpu_budget > 0.0)) invalid("cpu_budget: must be > 0");
  if (plan.retry_crashed < 0) invalid("retry_crashed: must be ≥ 0");
  std::set<std::string> names;
  for (const auto& m : plan.matches) {
    validate_match_spec(m);
    if (!names.insert(m.game_name).second) invalid(fmt::format("game_name: '{}' appears twice", m.game_name));
    if (m.cost() > plan.cpu_budget + kBudgetEpsilon) {
      invalid(fmt::format("{}: cost {} exceeds cpu_budget {}", m.game_name, m.cost(), plan.cpu_budget));
    }
  }
}

DeploymentPlan plan_round_robin(const std::vector<BotMetadata>& bots, const std::vector<std::string>& maps,
                                int repeats, const MatchSpec& tmpl) {
  if (bots.size() < 2) invalid("round robin needs ≥2 bots");
  if (maps.empty()) invalid("round robin needs ≥1 map");
  if (repeats < 1) invalid("repeats: must be ≥ 1");
  DeploymentPlan plan;
  for (std::size_t i = 0; i < bots.size(); ++i) {
    for (std::size_t j = i + 1; j < bots.size(); ++j) {
      for (std::size_t m = 0; m < maps.size(); ++m) {
        for (int r = 0; r < repeats; ++r) {
          MatchSpec spec = tmpl;
          spec.game_name = fmt::format("rr_{}_{}_{}_{}", i, j, m, r);
          spec.map = maps[m];
          spec.players = {
              PlayerSlot{0, bots[i].name, bots[i].race, bots[i].bot_file()},
              PlayerSlot{1, bots[j].name, bots[j].race, bots[j].bot_file()},
          };
          validate_match_spec(spec);
          plan.matches.push_back(std::move(spec));
        }
      }
    }
  }
  return plan;
}

DeploymentPlan parse_plan(std::string_view text) {
  const auto root = detail::load_yaml(text);
  if (!root.IsMap()) throw Error(ErrorKind::Syntax, "plan must be a mapping");
  static const std::set<std::string> plan_keys{"max_concurrent", "cpu_budget", "retry_crashed", "seed",
                                               "matches",        "round_robin", "defaults"};

  DeploymentPlan plan;
  if (root["max_concurrent"]) plan.max_concurrent = plan_scalar<int>(root["max_concurrent"], "max_concurrent");
  if (root["cpu_budget"]) plan.cpu_budget = plan_scalar<double>(root["cpu_budget"], "cpu_budget");
  if (root["retry_crashed"]) plan.retry_crashed = plan_scalar<int>(root["retry_crashed"], "retry_crashed");
  if (root["seed"]) plan.seed = plan_scalar<std::uint64_t>(root["seed"], "seed");

  if (root["game_name"]) plan.matches.push_back(detail::match_spec_from_yaml(root, plan_keys));
  if (const auto matches = root["matches"]) {
    if (!matches.IsSequence()) invalid("matches: expected a list");
    for (const auto& m : matches) plan.matches.push_back(detail::match_spec_from_yaml(m, {}));
  }
  if (const auto rr = root["round_robin"]) {
    if (!rr.IsMap()) invalid("round_robin: expected a mapping");
    MatchSpec tmpl;
    if (const auto d = root["defaults"]) {
      if (!d.IsMap()) invalid("defaults: expected a mapping");
      if (d["headful"]) tmpl.headful = plan_scalar<bool>(d["headful"], "defaults.headful");
      if (d["timeout_s"]) tmpl.timeout_s = plan_scalar<int>(d["timeout_s"], "defaults.timeout_s");
      if (const auto l = d["limits"]) {
        if (l["cpus"]) tmpl.limits.cpus = plan_scalar<double>(l["cpus"], "defaults.limits.cpus");
        if (l["memory_mib"]) tmpl.limits.memory_mib = plan_scalar<int>(l["memory_mib"], "defaults.limits.memory_mib");
      }
    }
    std::vector<BotMetadata> bots;
    for (const auto& b : rr["bots"]) {
      BotMetadata meta;
      if (!b["bot_name"]) invalid("round_robin.bots: bot_name missing");
      meta.name = plan_scalar<std::string>(b["bot_name"], "round_robin.bots.bot_name");
      if (b["race"]) meta.race = parse_race(plan_scalar<std::string>(b["race"], "round_robin.bots.race"));
      auto file = b["bot_file"] ? plan_scalar<std::string>(b["bot_file"], "round_robin.bots.bot_file")
                                : meta.name + ".dll";
      try {
        meta.bot_type = detect_bot_type(file);
      } catch (const Error&) {
        invalid(fmt::format("round_robin.bots.bot_file: '{}' unsupported", file));
      }
      if (file != meta.bot_file()) invalid(fmt::format("round_robin.bots.bot_file: must be {}", meta.bot_file()));
      bots.push_back(std::move(meta));
    }
    std::vector<std::string> maps;
    for (const auto& m : rr["maps"]) maps.push_back(plan_scalar<std::string>(m, "round_robin.maps"));
    int repeats = rr["repeats"] ? plan_scalar<int>(rr["repeats"], "round_robin.repeats") : 1;
    tmpl.game_name = "template";
    tmpl.map = maps.empty() ? std::string("none") : maps.front();
    auto rr_plan = plan_round_robin(bots, maps, repeats, tmpl);
    plan.matches.insert(plan.matches.end(), rr_plan.matches.begin(), rr_plan.matches.end());
  }
  for (const auto& kv : root) {
    auto key = kv.first.as<std::string>();
    static const std::set<std::string> spec_keys{"game_name", "map", "headful", "timeout_s", "limits", "players"};
    if (!plan_keys.contains(key) && !spec_keys.contains(key)) invalid(key + ": unknown key");
  }
  validate_plan(plan);
  return plan;
}

std::vector<GameResult> DeploymentReport::final_results() const {
  std::vector<GameResult> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.result);
  return out;
}

DeploymentReport run_plan(const DeploymentPlan& plan, Runtime& runtime, Clock& clock,
                          const std::filesystem::path& base_dir, PortAllocator& ports,
                          const LifecycleOptions& options) {
  validate_plan(plan);

  struct Queued {
    MatchSpec spec;
    std::size_t index;
    int attempt;  // 1-based
  };
  struct Active {
    MatchHandle handle;
    std::size_t index;
    int attempt;
    double cost;
  };

  const VolumeLayout layout(base_dir);
  const auto started = clock.now();
  std::vector<std::optional<MatchReport>> finals(plan.matches.size());
  std::deque<Queued> queue;
  for (std::size_t i = 0; i < plan.matches.size(); ++i) queue.push_back({plan.matches[i], i, 1});
  std::list<Active> active;
  DeploymentReport report;

  auto finish = [&](std::size_t index, int attempt, MatchPhase phase, GameResult result) {
    finals[index] = MatchReport{plan.matches[index].game_name, attempt, phase, std::move(result)};
  };

  while (!queue.empty() || !active.empty()) {
    double used = 0.0;
    for (const auto& a : active) used += a.cost;
    for (auto it = queue.begin(); it != queue.end() && static_cast<int>(active.size()) < plan.max_concurrent;) {
      const double cost = it->spec.cost();
      if (used + cost > plan.cpu_budget + kBudgetEpsilon) {
        ++it;
        continue;
      }
      try {
        auto handle = begin_match(it->spec, layout, ports, clock.now());
        step_launch(handle, runtime, clock, options);
        active.push_back({std::move(handle), it->index, it->attempt, cost});
        used += cost;
      } catch (const Error& e) {
        spdlog::warn("[{}] not launched: {}", it->spec.game_name, e.what());
        finish(it->index, it->attempt, MatchPhase::Aborted, aborted_result(it->spec, 0.0));
      }
      it = queue.erase(it);
    }
    report.trace.push_back({clock.now(), static_cast<int>(active.size()), used});

    for (auto it = active.begin(); it != active.end();) {
      auto& h = it->handle;
      if (h.state.phase == MatchPhase::Running) {
        poll(h, runtime, clock);
      } else if (!is_terminal(h.state.phase)) {
        step_launch(h, runtime, clock, options);
      }
      if (!is_terminal(h.state.phase)) {
        ++it;
        continue;
      }
      teardown(h, runtime, options);
      const auto phase = h.state.phase;
      if (phase == MatchPhase::Crashed && it->attempt <= plan.retry_crashed) {
        Queued retry{plan.matches[it->index], it->index, it->attempt + 1};
        retry.spec.game_name = fmt::format("{}_retry{}", plan.matches[it->index].game_name, it->attempt);
        queue.push_front(std::move(retry));
      } else {
        auto result = h.state.result.value_or(aborted_result(h.spec, 0.0));
        finish(it->index, it->attempt, phase, std::move(result));
      }
      it = active.erase(it);
    }

    if (!active.empty()) clock.sleep_for(options.poll_interval);
  }

  for (auto& f : finals) report.entries.push_back(std::move(*f));
  report.wall_seconds = static_cast<double>((clock.now() - started).count()) / 1000.0;
  report.win_matrix = win_matrix(report.final_results());
  return report;
}

std::map<std::pair<std::string, std::string>, PairRecord> win_matrix(const std::vector<GameResult>& results) {
  std::map<std::pair<std::string, std::string>, PairRecord> matrix;
  for (const auto& r : results) {
    const auto winner = r.outcome == Outcome::Decided ? r.winner_bot() : std::nullopt;
    std::set<std::string> bots;
    for (const auto& p : r.players) bots.insert(p.bot_name);
    for (auto a = bots.begin(); a != bots.end(); ++a) {
      for (auto b = std::next(a); b != bots.end(); ++b) {
        auto& cell = matrix[{*a, *b}];
        if (winner == *a) {
          ++cell.first_wins;
        } else if (winner == *b) {
          ++cell.second_wins;
        } else {
          ++cell.other;
        }
      }
    }
  }
  return matrix;
}

std::string summarize(const DeploymentReport& report) {
  std::set<std::string> names;
  for (const auto& [pair, rec] : report.win_matrix) {
    names.insert(pair.first);
    names.insert(pair.second);
  }
  std::vector<std::string> bots(names.begin(), names.end());
  std::size_t width = 3;
  for (const auto& b : bots) width = std::max(width, b.size());
  std::vector<std::vector<std::string>> cells(bots.size(), std::vector<std::string>(bots.size(), "-"));
  for (std::size_t i = 0; i < bots.size(); ++i) {
    for (std::size_t j = 0; j < bots.size(); ++j) {
      if (i == j) continue;
      const bool row_first = bots[i] < bots[j];
      auto key = row_first ? std::pair{bots[i], bots[j]} : std::pair{bots[j], bots[i]};
      PairRecord rec;
      if (auto it = report.win_matrix.find(key); it != report.win_matrix.end()) rec = it->second;
      const int wins = row_first ? rec.first_wins : rec.second_wins;
      const int losses = row_first ? rec.second_wins : rec.first_wins;
      cells[i][j] = fmt::format("{}-{}-{}", wins, losses, rec.other);
      width = std::max(width, cells[i][j].size());
    }
  }
  std::string out = fmt::format("{:<{}}", "bot", width);
  for (const auto& b : bots) out += fmt::format("  {:>{}}", b, width);
  out += "\n";
  for (std::size_t i = 0; i < bots.size(); ++i) {
    out += fmt::format("{:<{}}", bots[i], width);
    for (std::size_t j = 0; j < bots.size(); ++j) out += fmt::format("  {:>{}}", cells[i][j], width);
    out += "\n";
  }
  return out;
}

}  // namespace arena
