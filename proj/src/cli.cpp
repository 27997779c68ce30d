#include "arena/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "arena/docker_runtime.hpp"
#include "arena/error.hpp"
#include "arena/lifecycle.hpp"
#include "arena/registry.hpp"
#include "arena/scheduler.hpp"
#include "arena/sim_runtime.hpp"
#include "arena/volumes.hpp"

namespace arena {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kDefaultRegistryUrl = "http://localhost:8080/api";

struct GlobalOptions {
  fs::path base_dir;
  std::string runtime_kind = "docker";
  std::string registry_url;
  std::string docker_host;
  std::string log_level = "warn";
  bool json_output = false;
  std::uint64_t seed = 0;
  int vnc_base = kDefaultVncBasePort;
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

fs::path default_base_dir() {
  if (const char* v = std::getenv("ARENA_BASE_DIR"); v && *v) return v;
  const char* home = std::getenv("HOME");
  return fs::path(home && *home ? home : ".") / ".arena";
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runtime, clock and port allocator for one invocation. The simulated
// runtime's state lives in <base>/sim-state.json between invocations.
class Session {
 public:
  explicit Session(const GlobalOptions& g) : g_(g) {
    std::error_code ec;
    fs::create_directories(g.base_dir, ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create {}: {}", g.base_dir.string(), ec.message()));
    if (g.runtime_kind == "sim") {
      auto sim = std::make_unique<SimRuntime>(default_game_script(g.seed));
      sim->load_state(sim_state_path());
      clock_ = std::make_unique<SimClock>(*sim);
      // Detached matches from earlier invocations keep their VNC ports.
      ports_ = std::make_unique<SimPortAllocator>(sim->bound_host_ports());
      sim_ = sim.get();
      runtime_ = std::move(sim);
    } else {
      auto ep = g.docker_host.empty() ? DockerEndpoint::from_env() : DockerEndpoint::parse(g.docker_host);
      runtime_ = std::make_unique<DockerRuntime>(ep);
      clock_ = std::make_unique<SystemClock>();
      ports_ = std::make_unique<LocalPortAllocator>();
    }
  }

  ~Session() {
    try {
      save();
    } catch (const std::exception& e) {
      spdlog::error("saving sim state: {}", e.what());
    }
  }

  void save() {
    if (sim_) sim_->save_state(sim_state_path());
  }

  bool simulated() const { return sim_ != nullptr; }
  Runtime& runtime() { return *runtime_; }
  Clock& clock() { return *clock_; }
  PortAllocator& ports() { return *ports_; }
  SimRuntime* sim() { return sim_; }
  VolumeLayout layout() const { return VolumeLayout(g_.base_dir); }

 private:
  fs::path sim_state_path() const { return g_.base_dir / "sim-state.json"; }

  const GlobalOptions& g_;
  std::unique_ptr<Runtime> runtime_;
  std::unique_ptr<Clock> clock_;
  std::unique_ptr<PortAllocator> ports_;
  SimRuntime* sim_ = nullptr;
};

// Makes sure every player's binary sits in bots/<name>/. The simulated
// runtime never touches the network: missing bots get a placeholder binary.
void ensure_bots(const std::vector<PlayerSlot>& players, const GlobalOptions& g, Session& session,
                 std::ostream& err) {
  auto layout = session.layout();
  std::optional<std::vector<BotMetadata>> listing;
  std::optional<RegistryClient> client;
  for (const auto& p : players) {
    auto target = installed_bot_path(layout, p);
    std::error_code ec;
    if (fs::is_regular_file(target, ec)) continue;
    if (session.simulated()) {
      fs::create_directories(target.parent_path(), ec);
      std::ofstream(target, std::ios::binary) << "placeholder bot " << p.bot_name << "\n";
      continue;
    }
    if (!client) client.emplace(g.registry_url);
    if (!listing) listing = client->list_bots();
    auto it = std::find_if(listing->begin(), listing->end(), [&](const BotMetadata& m) { return m.name == p.bot_name; });
    if (it == listing->end()) throw Error(ErrorKind::Provision, fmt::format("bot {} not in registry", p.bot_name));
    err << fmt::format("fetching {} ({})\n", it->name, it->sha256.substr(0, 12));
    auto pkg = client->fetch_bot(*it, g.base_dir / "cache");
    auto installed = install_bot_files(layout, pkg);
    if (installed.filename() != p.bot_file) {
      throw Error(ErrorKind::Provision,
                  fmt::format("registry serves {} but the match wants {}", installed.filename().string(), p.bot_file));
    }
  }
}

// bot_file for a --bot flag: whatever is already installed, else what the
// registry serves, else a .dll placeholder name (sim only).
PlayerSlot player_for_flag(const std::string& name, int slot, const GlobalOptions& g, Session& session) {
  PlayerSlot p{slot, name, Race::Random, name + ".dll"};
  if (!is_identifier(name)) throw Error(ErrorKind::Validation, fmt::format("bot name '{}' is not valid", name));
  std::error_code ec;
  auto dir = session.layout().bot_dir(name);
  if (fs::is_directory(dir, ec)) {
    std::vector<std::string> files;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (!f.is_regular_file()) continue;
      try {
        detect_bot_type(f.path().filename().string());
        files.push_back(f.path().filename().string());
      } catch (const Error&) {
      }
    }
    std::sort(files.begin(), files.end());
    if (!files.empty()) {
      p.bot_file = files.front();
      return p;
    }
  }
  if (!session.simulated()) {
    RegistryClient client(g.registry_url);
    for (const auto& m : client.list_bots()) {
      if (m.name == name) {
        p.bot_file = m.bot_file();
        p.race = m.race;
        return p;
      }
    }
    throw Error(ErrorKind::Provision, fmt::format("bot {} not installed and not in registry", name));
  }
  return p;
}

json result_json(const GameResult& r) {
  json players = json::array();
  for (const auto& p : r.players) {
    players.push_back({{"slot", p.slot},
                       {"bot_name", p.bot_name},
                       {"is_winner", p.is_winner},
                       {"is_crashed", p.is_crashed},
                       {"frame_count", p.frame_count}});
  }
  return {{"game_name", r.game_name},
          {"outcome", std::string(to_string(r.outcome))},
          {"winner_slot", r.winner_slot ? json(*r.winner_slot) : json(nullptr)},
          {"winner_bot", r.winner_bot() ? json(*r.winner_bot()) : json(nullptr)},
          {"wall_seconds", r.wall_seconds},
          {"players", players}};
}

int exit_code_for(MatchPhase phase) {
  switch (phase) {
    case MatchPhase::Finished: return kExitFinished;
    case MatchPhase::Crashed: return kExitCrashed;
    case MatchPhase::TimedOut: return kExitTimedOut;
    default: return kExitError;
  }
}

struct PlayOptions {
  std::string spec_file;
  std::vector<std::string> bots;
  std::string map;
  std::string game_name;
  bool headful = false;
  int timeout_s = kDefaultTimeoutSeconds;
  double cpus = 1.0;
  int memory_mib = 2048;
  bool detach = false;
};

int cmd_play(const GlobalOptions& g, const PlayOptions& o, std::ostream& out, std::ostream& err) {
  Session session(g);
  MatchSpec spec;
  if (!o.spec_file.empty()) {
    spec = parse_match_spec(read_text(o.spec_file));
  } else {
    if (o.bots.size() < 2) {
      err << "play: need at least two --bot (or a spec file)\n";
      return kExitError;
    }
    if (o.map.empty()) {
      err << "play: --map is required\n";
      return kExitError;
    }
    spec.map = o.map;
    spec.headful = o.headful;
    spec.timeout_s = o.timeout_s;
    spec.limits = {o.cpus, o.memory_mib};
    std::string name = "play";
    for (std::size_t i = 0; i < o.bots.size(); ++i) {
      spec.players.push_back(player_for_flag(o.bots[i], static_cast<int>(i), g, session));
      name += "_" + o.bots[i];
    }
    spec.game_name = o.game_name.empty() ? name.substr(0, 64) : o.game_name;
    validate_match_spec(spec);
  }
  ensure_bots(spec.players, g, session, err);

  LifecycleOptions lo;
  lo.vnc_base_port = g.vnc_base;
  auto handle = launch_match(spec, session.runtime(), session.layout(), session.ports(), session.clock(), lo);
  if (handle.vnc_ports) {
    if (!g.json_output) {
      for (std::size_t i = 0; i < handle.vnc_ports->size(); ++i) {
        out << fmt::format("VNC: slot {} → localhost:{}\n", i, handle.vnc_ports->at(i));
      }
    }
  }
  if (o.detach) {
    if (g.json_output) {
      out << json{{"game_name", spec.game_name},
                  {"state", "Running"},
                  {"vnc_ports", handle.vnc_ports ? json(*handle.vnc_ports) : json(nullptr)}}
                 .dump()
          << "\n";
    } else {
      out << fmt::format("{} running ({} containers)\n", spec.game_name, spec.players.size());
    }
    return kExitFinished;
  }

  auto state = await_completion(handle, session.runtime(), session.clock(), lo);
  const auto& result = *state.result;
  if (g.json_output) {
    auto j = result_json(result);
    j["state"] = std::string(to_string(state.phase));
    j["vnc_ports"] = handle.vnc_ports ? json(*handle.vnc_ports) : json(nullptr);
    if (!state.reason.empty()) j["reason"] = state.reason;
    out << j.dump() << "\n";
  } else {
    out << fmt::format("game: {}\nstate: {}\noutcome: {}\n", result.game_name, to_string(state.phase),
                       to_string(result.outcome));
    if (result.winner_slot) out << fmt::format("winner: slot {} ({})\n", *result.winner_slot, *result.winner_bot());
    if (!state.crashed_slots.empty()) {
      std::string slots;
      for (int s : state.crashed_slots) slots += (slots.empty() ? "" : ",") + std::to_string(s);
      out << "crashed: " << slots << "\n";
    }
    out << fmt::format("frames: {}\nwall_seconds: {:.3f}\n", result.frames(), result.wall_seconds);
    if (!state.reason.empty()) out << "reason: " << state.reason << "\n";
  }
  return exit_code_for(state.phase);
}

int cmd_deploy(GlobalOptions g, const std::string& plan_file, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  auto plan = parse_plan(read_text(plan_file));
  g.seed = plan.seed;
  Session session(g);
  std::vector<PlayerSlot> players;
  std::set<std::string> seen;
  for (const auto& m : plan.matches) {
    for (const auto& p : m.players) {
      if (seen.insert(p.bot_name + "/" + p.bot_file).second) players.push_back(p);
    }
  }
  ensure_bots(players, g, session, err);

  LifecycleOptions lo;
  lo.vnc_base_port = g.vnc_base;
  auto report = run_plan(plan, session.runtime(), session.clock(), g.base_dir, session.ports(), lo);

  fs::path dir = out_dir.empty() ? g.base_dir / "reports" / fs::path(plan_file).stem() : fs::path(out_dir);
  auto results = report.final_results();
  write_report(results, ReportFormat::Json, dir / "report.json");
  write_report(results, ReportFormat::Csv, dir / "report.csv");

  bool all_terminal = std::all_of(report.entries.begin(), report.entries.end(),
                                  [](const MatchReport& e) { return is_terminal(e.final_phase); });
  if (g.json_output) {
    json entries = json::array();
    for (const auto& e : report.entries) {
      auto j = result_json(e.result);
      j["planned_name"] = e.planned_name;
      j["attempts"] = e.attempts;
      j["state"] = std::string(to_string(e.final_phase));
      entries.push_back(j);
    }
    out << json{{"matches", entries}, {"wall_seconds", report.wall_seconds}, {"report_dir", dir.string()}}.dump()
        << "\n";
  } else {
    out << summarize(report);
    out << fmt::format("{} matches, {:.1f} s; reports in {}\n", report.entries.size(), report.wall_seconds,
                       dir.string());
  }
  return all_terminal ? 0 : 1;
}

int cmd_bots(const GlobalOptions& g, const std::string& action, const std::string& name, std::ostream& out,
             std::ostream& err) {
  RegistryClient client(g.registry_url);
  auto bots = client.list_bots();
  if (action == "list") {
    if (g.json_output) {
      out << render_bot_list(bots) << "\n";
    } else {
      for (const auto& b : bots) {
        out << fmt::format("{}\t{}\t{}\t{}\n", b.name, to_string(b.race), extension_of(b.bot_type), b.sha256);
      }
    }
    return 0;
  }
  auto it = std::find_if(bots.begin(), bots.end(), [&](const BotMetadata& m) { return m.name == name; });
  if (it == bots.end()) {
    err << fmt::format("bots fetch: no bot named '{}'\n", name);
    return 1;
  }
  std::error_code ec;
  fs::create_directories(g.base_dir, ec);
  VolumeLayout layout(g.base_dir);
  fs::create_directories(layout.bots_dir(), ec);
  auto pkg = client.fetch_bot(*it, g.base_dir / "cache");
  auto installed = install_bot_files(layout, pkg);
  if (g.json_output) {
    out << json{{"name", it->name}, {"sha256", it->sha256}, {"path", installed.string()}}.dump() << "\n";
  } else {
    out << fmt::format("{} installed at {}\n", it->name, installed.string());
  }
  return 0;
}

int cmd_status(const GlobalOptions& g, std::ostream& out) {
  Session session(g);
  auto& rt = session.runtime();
  auto handles = rt.list_with_label(kGameLabel);
  json rows = json::array();
  for (const auto& h : handles) {
    auto status = rt.inspect(h);
    rows.push_back({{"name", h.name}, {"id", h.id}, {"status", describe(status)}});
  }
  if (g.json_output) {
    out << rows.dump() << "\n";
  } else {
    for (const auto& r : rows) {
      out << fmt::format("{}\t{}\n", r["name"].get<std::string>(), r["status"].get<std::string>());
    }
    out << fmt::format("{} containers\n", rows.size());
  }
  return 0;
}

int cmd_clean(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  Session session(g);
  auto& rt = session.runtime();
  int removed = 0;
  int failed = 0;
  for (const auto& h : rt.list_with_label(kGameLabel)) {
    try {
      rt.stop(h, 10);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotFound) err << "stop " << h.name << ": " << e.what() << "\n";
    }
    try {
      rt.remove(h);
      ++removed;
    } catch (const Error& e) {
      ++failed;
      err << "remove " << h.name << ": " << e.what() << "\n";
    }
  }
  int networks = 0;
  for (const auto& n : rt.list_networks("arena_")) {
    rt.remove_network(n);
    ++networks;
  }
  if (g.json_output) {
    out << json{{"removed", removed}, {"networks_removed", networks}, {"failed", failed}}.dump() << "\n";
  } else {
    out << fmt::format("{} removed, {} networks pruned\n", removed, networks);
  }
  return failed == 0 ? 0 : 1;
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("arena");
  if (!logger) {
    logger = spdlog::stderr_color_mt("arena");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run AI-bot game matches in isolated containers", "arena"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::string base_dir;
  app.add_option("--base-dir", base_dir, "Host directory tree root (default $ARENA_BASE_DIR or ~/.arena)");
  app.add_option("--runtime", g.runtime_kind, "Container runtime")->check(CLI::IsMember({"docker", "sim"}));
  app.add_option("--registry-url", g.registry_url, "Bot registry base URL (default $ARENA_REGISTRY_URL)");
  app.add_option("--docker-host", g.docker_host, "Docker endpoint (default $ARENA_DOCKER_HOST)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.add_flag("--json", g.json_output, "Machine-readable output");
  app.add_option("--seed", g.seed, "Seed for the simulated runtime");
  app.add_option("--vnc-base", g.vnc_base, "Lowest host port for VNC bindings")->check(CLI::Range(1, kMaxPort));

  PlayOptions play;
  auto* play_cmd = app.add_subcommand("play", "Run one match and print its result");
  play_cmd->add_option("spec_file", play.spec_file, "Match spec file (YAML)");
  play_cmd->add_option("--bot", play.bots, "Bot name, once per player");
  play_cmd->add_option("--map", play.map, "Map path relative to <base>/maps");
  play_cmd->add_option("--game-name", play.game_name, "Game name");
  play_cmd->add_flag("--headful", play.headful, "Run with GUI and expose VNC");
  play_cmd->add_option("--timeout", play.timeout_s, "Match timeout in seconds")->check(CLI::PositiveNumber);
  play_cmd->add_option("--cpus", play.cpus, "CPUs per container")->check(CLI::PositiveNumber);
  play_cmd->add_option("--memory", play.memory_mib, "Memory per container (MiB)")->check(CLI::Range(256, 1 << 30));
  play_cmd->add_flag("--detach", play.detach, "Return once the match is running");

  std::string plan_file;
  std::string out_dir;
  auto* deploy_cmd = app.add_subcommand("deploy", "Run a deployment plan");
  deploy_cmd->add_option("plan_file", plan_file, "Plan file (YAML)")->required();
  deploy_cmd->add_option("--out", out_dir, "Report directory (default <base>/reports/<plan>)");

  std::string bots_action;
  std::string bot_name;
  auto* bots_cmd = app.add_subcommand("bots", "List or fetch registry bots");
  bots_cmd->add_option("action", bots_action, "list | fetch")->required()->check(CLI::IsMember({"list", "fetch"}));
  bots_cmd->add_option("name", bot_name, "Bot to fetch");

  auto* status_cmd = app.add_subcommand("status", "List arena containers");
  auto* clean_cmd = app.add_subcommand("clean", "Stop and remove all arena containers and networks");

  std::vector<std::string> argv_store{"arena"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) err << sub->help();
    return kExitError;
  }

  g.base_dir = base_dir.empty() ? default_base_dir() : fs::path(base_dir);
  if (g.registry_url.empty()) g.registry_url = env_or("ARENA_REGISTRY_URL", kDefaultRegistryUrl);
  configure_logging(g.log_level);

  try {
    if (*play_cmd) return cmd_play(g, play, out, err);
    if (*deploy_cmd) return cmd_deploy(g, plan_file, out_dir, out, err);
    if (*bots_cmd) {
      if (bots_action == "fetch" && bot_name.empty()) {
        err << "bots fetch: NAME required\n";
        return kExitError;
      }
      return cmd_bots(g, bots_action, bot_name, out, err);
    }
    if (*status_cmd) return cmd_status(g, out);
    if (*clean_cmd) return cmd_clean(g, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace arena
