#include "arena/lifecycle.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace arena {

namespace fs = std::filesystem;

std::string_view to_string(MatchPhase phase) {
  switch (phase) {
    case MatchPhase::Pending: return "Pending";
    case MatchPhase::Provisioning: return "Provisioning";
    case MatchPhase::HostStarting: return "HostStarting";
    case MatchPhase::Joining: return "Joining";
    case MatchPhase::Running: return "Running";
    case MatchPhase::Finished: return "Finished";
    case MatchPhase::Crashed: return "Crashed";
    case MatchPhase::TimedOut: return "TimedOut";
    case MatchPhase::Aborted: return "Aborted";
  }
  return "?";
}

bool is_terminal(MatchPhase phase) {
  return phase == MatchPhase::Finished || phase == MatchPhase::Crashed || phase == MatchPhase::TimedOut ||
         phase == MatchPhase::Aborted;
}

bool is_legal_transition(MatchPhase from, MatchPhase to) {
  if (is_terminal(from)) return false;
  if (to == MatchPhase::Aborted) return true;
  switch (from) {
    case MatchPhase::Pending: return to == MatchPhase::Provisioning;
    case MatchPhase::Provisioning: return to == MatchPhase::HostStarting;
    case MatchPhase::HostStarting: return to == MatchPhase::Joining;
    case MatchPhase::Joining: return to == MatchPhase::Running;
    case MatchPhase::Running:
      return to == MatchPhase::Finished || to == MatchPhase::Crashed || to == MatchPhase::TimedOut;
    default: return false;
  }
}

std::string network_name(const std::string& game_name) { return "arena_" + game_name; }

std::string container_name(const std::string& game_name, int slot) {
  return fmt::format("arena_{}_{}", game_name, slot);
}

namespace {

double seconds_between(Instant from, Instant to) {
  return static_cast<double>((to - from).count()) / 1000.0;
}

void warn(MatchHandle& h, std::string message) {
  spdlog::warn("[{}] {}", h.spec.game_name, message);
  h.warnings.push_back(std::move(message));
}

void transition(MatchHandle& h, MatchState next) {
  if (!is_legal_transition(h.state.phase, next.phase)) {
    throw std::logic_error(fmt::format("illegal match transition {} -> {}", to_string(h.state.phase),
                                       to_string(next.phase)));
  }
  h.state = std::move(next);
  h.history.push_back(h.state.phase);
}

void move_to(MatchHandle& h, MatchPhase phase) {
  MatchState next = h.state;
  next.phase = phase;
  transition(h, std::move(next));
}

void fail_launch(MatchHandle& h, Runtime& runtime, Clock& clock, const LifecycleOptions& options, ErrorKind kind,
                 const std::string& reason) {
  MatchState next;
  next.phase = MatchPhase::Aborted;
  next.error = kind;
  next.reason = fmt::format("{}: {}", to_string(kind), reason);
  next.result = aborted_result(h.spec, seconds_between(h.launched_at, clock.now()));
  transition(h, std::move(next));
  teardown(h, runtime, options);
}

std::optional<std::string> read_file(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void start_slot(MatchHandle& h, Runtime& runtime, const LifecycleOptions& options, int slot) {
  auto cfg = container_config_for(h, slot, options);
  auto handle = runtime.create(cfg);
  h.containers[static_cast<std::size_t>(slot)] = handle;
  runtime.start(handle);
}

void provision(MatchHandle& h, Runtime& runtime, const LifecycleOptions& options) {
  if (!runtime.list_by_label(kGameLabel, h.spec.game_name).empty()) {
    throw Error(ErrorKind::Validation, fmt::format("game_name: '{}' is already live", h.spec.game_name));
  }
  h.owns_game = true;
  try {
    // Leftovers from an earlier game of the same name would be read as results.
    std::error_code ec;
    fs::remove_all(h.layout.game_dir(h.spec.game_name), ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("cannot clear {}: {}", h.layout.game_dir(h.spec.game_name).string(), ec.message()));
    h.layout = prepare_layout(h.layout.base_dir(), h.spec);
    validate_cross(h.spec, list_maps(h.layout));
    for (const auto& p : h.spec.players) {
      std::error_code ec;
      if (!fs::is_regular_file(installed_bot_path(h.layout, p), ec)) {
        throw Error(ErrorKind::Provision, fmt::format("bot {} not installed at {}", p.bot_name,
                                                      installed_bot_path(h.layout, p).string()));
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Provision) throw;
    throw Error(ErrorKind::Provision, e.what());
  }
  h.network_id = runtime.ensure_network(h.network);
  if (h.spec.headful) {
    h.vnc_ports = h.ports->allocate(static_cast<int>(h.spec.players.size()), options.vnc_base_port);
  }
}

// Whether the host has signalled readiness; throws HostStartTimeout when it
// never will.
bool host_ready(MatchHandle& h, Runtime& runtime, Clock& clock, const LifecycleOptions& options) {
  const auto now = clock.now();
  const auto status = runtime.inspect(*h.containers.front());
  if (status.state == ContainerStatus::State::Running) {
    std::error_code ec;
    auto marker = h.layout.write_dir(h.spec.game_name, 0) / host_ready_file_name(h.spec.game_name);
    if (fs::exists(marker, ec)) return true;
    if (now - status.since >= options.host_ready_fallback) return true;
  } else if (status.state != ContainerStatus::State::Created) {
    throw Error(ErrorKind::HostStartTimeout, fmt::format("host went {} before ready", describe(status)));
  }
  if (now - h.host_created_at >= options.host_ready_timeout) {
    throw Error(ErrorKind::HostStartTimeout, "host not ready in time");
  }
  return false;
}

}  // namespace

ContainerConfig container_config_for(const MatchHandle& handle, int slot, const LifecycleOptions& options) {
  const auto& spec = handle.spec;
  const auto& player = spec.players.at(static_cast<std::size_t>(slot));
  const auto type = detect_bot_type(player.bot_file);

  ContainerConfig cfg;
  cfg.name = container_name(spec.game_name, slot);
  cfg.image = resolve_image(type, spec.headful, options.images);
  cfg.env = {
      "GAME_NAME=" + spec.game_name,
      fmt::format("PLAYER_SLOT={}", slot),
      fmt::format("NUM_PLAYERS={}", spec.players.size()),
      "BOT_NAME=" + player.bot_name,
      fmt::format("BOT_FILE={}/{}/{}", mount_point::kBots, player.bot_name, player.bot_file),
      "BOT_TYPE=" + std::string(extension_of(type)),
      fmt::format("MAP={}/{}", mount_point::kMaps, spec.map),
      fmt::format("HEADFUL={}", spec.headful ? 1 : 0),
      "LAN_HOST=" + (slot == 0 ? std::string() : container_name(spec.game_name, 0)),
      fmt::format("TIMEOUT_S={}", spec.timeout_s),
  };
  cfg.mounts = mounts_for_slot(handle.layout, spec, slot);
  cfg.network = handle.network;
  cfg.cpus = spec.limits.cpus;
  cfg.memory_mib = spec.limits.memory_mib;
  if (spec.headful && handle.vnc_ports) {
    cfg.port_bindings.push_back({kVncContainerPort, handle.vnc_ports->at(static_cast<std::size_t>(slot))});
  }
  cfg.labels = {{kGameLabel, spec.game_name},
                {kSlotLabel, std::to_string(slot)},
                {"arena.bot", player.bot_name}};
  return cfg;
}

MatchHandle begin_match(const MatchSpec& spec, const VolumeLayout& layout, PortAllocator& ports, Instant now) {
  validate_match_spec(spec);
  MatchHandle h;
  h.spec = spec;
  h.layout = layout;
  h.containers.resize(spec.players.size());
  h.network = network_name(spec.game_name);
  h.launched_at = now;
  h.deadline = now + std::chrono::seconds(spec.timeout_s);
  h.ports = &ports;
  h.history.push_back(MatchPhase::Pending);
  return h;
}

MatchState step_launch(MatchHandle& h, Runtime& runtime, Clock& clock, const LifecycleOptions& options) {
  try {
    if (h.state.phase == MatchPhase::Pending) move_to(h, MatchPhase::Provisioning);

    if (h.state.phase == MatchPhase::Provisioning) {
      provision(h, runtime, options);
      move_to(h, MatchPhase::HostStarting);
      h.host_created_at = clock.now();
      try {
        start_slot(h, runtime, options, 0);
      } catch (const Error& e) {
        // A host that was created but will not start can never become ready.
        if (h.containers.front()) throw Error(ErrorKind::HostStartTimeout, e.what());
        throw;
      }
    }

    if (h.state.phase == MatchPhase::HostStarting) {
      if (!host_ready(h, runtime, clock, options)) return h.state;
      move_to(h, MatchPhase::Joining);
      for (int slot = 1; slot < static_cast<int>(h.spec.players.size()); ++slot) {
        try {
          start_slot(h, runtime, options, slot);
        } catch (const Error& e) {
          warn(h, fmt::format("slot {} failed to launch: {}", slot, e.what()));
          h.crashed.insert(slot);
        }
      }
      move_to(h, MatchPhase::Running);
    }
  } catch (const Error& e) {
    fail_launch(h, runtime, clock, options, e.kind(), e.detail());
  }
  return h.state;
}

MatchHandle launch_match(const MatchSpec& spec, Runtime& runtime, const VolumeLayout& layout, PortAllocator& ports,
                         Clock& clock, const LifecycleOptions& options) {
  auto h = begin_match(spec, layout, ports, clock.now());
  while (true) {
    auto state = step_launch(h, runtime, clock, options);
    if (state.phase == MatchPhase::Running) return h;
    if (is_terminal(state.phase)) {
      throw Error(state.error.value_or(ErrorKind::RuntimeUnavailable), state.reason);
    }
    clock.sleep_for(options.poll_interval);
  }
}

MatchState poll(MatchHandle& h, Runtime& runtime, Clock& clock) {
  if (h.state.phase != MatchPhase::Running) return h.state;
  const auto now = clock.now();
  const int n = static_cast<int>(h.spec.players.size());

  std::map<int, std::optional<PlayerResult>> per_slot;
  auto crashed = h.crashed;
  bool pending = false;

  auto load_result = [&](int slot) -> bool {
    auto path = h.layout.write_dir(h.spec.game_name, slot) / result_file_name(h.spec.game_name);
    auto text = read_file(path);
    if (!text) return false;
    try {
      auto r = parse_result_file(*text);
      if (r.slot != slot) throw Error(ErrorKind::Protocol, fmt::format("file claims slot {}", r.slot));
      per_slot[slot] = r;
    } catch (const Error& e) {
      warn(h, fmt::format("slot {} result unusable: {}", slot, e.what()));
      crashed.insert(slot);
    }
    return true;
  };

  try {
    for (int slot = 0; slot < n; ++slot) {
      if (crashed.contains(slot)) continue;
      if (load_result(slot)) continue;
      const auto& handle = h.containers[static_cast<std::size_t>(slot)];
      auto status = handle ? runtime.inspect(*handle) : ContainerStatus::not_found();
      if (status.state == ContainerStatus::State::Exited || status.state == ContainerStatus::State::NotFound) {
        // The file may have landed between the first look and the exit.
        if (load_result(slot)) continue;
        crashed.insert(slot);
      } else {
        pending = true;
      }
    }
  } catch (const Error& e) {
    warn(h, fmt::format("poll: {}", e.what()));
    return h.state;
  }
  h.crashed = crashed;

  const int alive = n - static_cast<int>(crashed.size());
  const bool decidable = !pending || alive <= 1;
  MatchState next;
  if (decidable) {
    try {
      auto result = aggregate(h.spec, per_slot, crashed, false);
      result.wall_seconds = seconds_between(h.launched_at, now);
      for (const auto& p : result.players) {
        if (p.is_crashed) next.crashed_slots.insert(p.slot);
      }
      next.phase = next.crashed_slots.empty() ? MatchPhase::Finished : MatchPhase::Crashed;
      next.result = std::move(result);
    } catch (const Error& e) {
      next.phase = MatchPhase::Aborted;
      next.error = e.kind();
      next.reason = e.what();
      next.result = aborted_result(h.spec, seconds_between(h.launched_at, now));
    }
  } else if (now >= h.deadline) {
    next.phase = MatchPhase::TimedOut;
    next.result = aggregate(h.spec, per_slot, crashed, true);
    next.result->wall_seconds = seconds_between(h.launched_at, now);
  } else {
    return h.state;
  }
  transition(h, std::move(next));
  return h.state;
}

MatchState await_completion(MatchHandle& h, Runtime& runtime, Clock& clock, const LifecycleOptions& options) {
  while (!is_terminal(h.state.phase)) {
    if (h.state.phase == MatchPhase::Running) {
      poll(h, runtime, clock);
    } else {
      step_launch(h, runtime, clock, options);
    }
    if (!is_terminal(h.state.phase)) clock.sleep_for(options.poll_interval);
  }
  teardown(h, runtime, options);
  return h.state;
}

void abort(MatchHandle& h, Runtime& runtime, Clock& clock, std::string reason, const LifecycleOptions& options) {
  if (!is_terminal(h.state.phase)) {
    MatchState next;
    next.phase = MatchPhase::Aborted;
    next.reason = std::move(reason);
    next.result = aborted_result(h.spec, seconds_between(h.launched_at, clock.now()));
    transition(h, std::move(next));
  }
  teardown(h, runtime, options);
}

void teardown(MatchHandle& h, Runtime& runtime, const LifecycleOptions& options) {
  if (!h.owns_game) {
    h.torn_down = true;
    return;
  }
  std::vector<ContainerHandle> targets;
  for (const auto& c : h.containers) {
    if (c) targets.push_back(*c);
  }
  try {
    for (auto& c : runtime.list_by_label(kGameLabel, h.spec.game_name)) {
      if (std::find(targets.begin(), targets.end(), c) == targets.end()) targets.push_back(c);
    }
  } catch (const Error& e) {
    warn(h, fmt::format("teardown list: {}", e.what()));
  }
  for (const auto& c : targets) {
    try {
      runtime.stop(c, options.stop_grace_s);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotFound) warn(h, fmt::format("stop {}: {}", c.name, e.what()));
    }
    try {
      runtime.remove(c);
    } catch (const Error& e) {
      warn(h, fmt::format("remove {}: {}", c.name, e.what()));
    }
  }
  try {
    runtime.remove_network(h.network);
  } catch (const Error& e) {
    warn(h, fmt::format("remove network {}: {}", h.network, e.what()));
  }
  if (h.vnc_ports && h.ports && !h.torn_down) h.ports->release(*h.vnc_ports);
  h.torn_down = true;
}

}  // namespace arena
