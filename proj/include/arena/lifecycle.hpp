#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "arena/config.hpp"
#include "arena/error.hpp"
#include "arena/ports.hpp"
#include "arena/results.hpp"
#include "arena/runtime.hpp"
#include "arena/volumes.hpp"

namespace arena {

enum class MatchPhase {
  Pending,
  Provisioning,
  HostStarting,
  Joining,
  Running,
  Finished,
  Crashed,
  TimedOut,
  Aborted,
};

std::string_view to_string(MatchPhase phase);
bool is_terminal(MatchPhase phase);

// Pending→Provisioning→HostStarting→Joining→Running→{Finished|Crashed|TimedOut},
// plus any non-terminal → Aborted. Terminal phases are absorbing.
bool is_legal_transition(MatchPhase from, MatchPhase to);

struct MatchState {
  MatchPhase phase = MatchPhase::Pending;
  std::optional<GameResult> result;  // set on every terminal phase
  std::set<int> crashed_slots;       // Crashed only
  std::optional<ErrorKind> error;    // why an Aborted launch failed
  std::string reason;
};

struct LifecycleOptions {
  std::chrono::milliseconds poll_interval{1000};
  // Host counts as ready after this long in Running without a marker file.
  std::chrono::milliseconds host_ready_fallback{5000};
  std::chrono::milliseconds host_ready_timeout{60000};
  int stop_grace_s = 10;
  int vnc_base_port = kDefaultVncBasePort;
  ImageDefaults images;
};

struct MatchHandle {
  MatchSpec spec;
  VolumeLayout layout;
  std::vector<std::optional<ContainerHandle>> containers;  // per slot; empty when create failed
  std::string network;                                     // arena_<game_name>
  std::string network_id;
  std::optional<std::vector<int>> vnc_ports;  // present iff spec.headful once provisioned
  MatchState state;
  Instant launched_at{0};
  Instant deadline{0};
  Instant host_created_at{0};
  std::set<int> crashed;  // slots known dead so far
  std::vector<MatchPhase> history;
  std::vector<std::string> warnings;
  PortAllocator* ports = nullptr;  // non-owning; VNC ports go back here on teardown
  bool owns_game = false;  // false while the name might belong to another live match
  bool torn_down = false;
};

std::string network_name(const std::string& game_name);
std::string container_name(const std::string& game_name, int slot);

// Full container description for one slot: image, env contract, mounts,
// limits, labels, and the VNC binding when headful.
ContainerConfig container_config_for(const MatchHandle& handle, int slot, const LifecycleOptions& options);

// Fresh handle in Pending.
MatchHandle begin_match(const MatchSpec& spec, const VolumeLayout& layout, PortAllocator& ports, Instant now);

// Advances a launching match as far as it can go without waiting. Returns the
// new state; launch failures tear the match down and end in Aborted with
// state.error set. No-op once Running or terminal.
MatchState step_launch(MatchHandle& handle, Runtime& runtime, Clock& clock, const LifecycleOptions& options = {});

// Blocking launch: returns a Running handle or throws Error{Provision,
// HostStartTimeout, RuntimeUnavailable, ...} after tearing everything down.
MatchHandle launch_match(const MatchSpec& spec, Runtime& runtime, const VolumeLayout& layout, PortAllocator& ports,
                         Clock& clock, const LifecycleOptions& options = {});

// Recomputes the state of a Running match; never blocks. Runtime errors leave
// the state unchanged and add a warning.
MatchState poll(MatchHandle& handle, Runtime& runtime, Clock& clock);

// Polls every poll_interval until terminal, then tears the match down.
MatchState await_completion(MatchHandle& handle, Runtime& runtime, Clock& clock, const LifecycleOptions& options = {});

// Moves a non-terminal match to Aborted and tears it down.
void abort(MatchHandle& handle, Runtime& runtime, Clock& clock, std::string reason = "aborted",
           const LifecycleOptions& options = {});

// Stops and removes every container of the match, removes its network and
// releases its VNC ports. Best effort: failures become warnings. Idempotent.
void teardown(MatchHandle& handle, Runtime& runtime, const LifecycleOptions& options = {});

}  // namespace arena
