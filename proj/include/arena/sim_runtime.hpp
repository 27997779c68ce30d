#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arena/runtime.hpp"

namespace arena {

struct SimFile {
  std::string container_path;  // must lie under one of the container's mounts
  std::string bytes;
  // Seconds after start; absent means "written just before exit".
  std::optional<double> at_s;

  friend bool operator==(const SimFile&, const SimFile&) = default;
};

// What one simulated container does once started.
struct ContainerPlan {
  double run_duration_s = 30.0;
  int exit_code = 0;
  std::vector<SimFile> files_to_write;
  bool fail_create = false;
  bool fail_start = false;

  friend bool operator==(const ContainerPlan&, const ContainerPlan&) = default;
};

struct SimScript {
  std::map<std::string, ContainerPlan> plans;  // by container name
  // Consulted for names without an explicit plan; default plan when empty.
  std::function<ContainerPlan(const ContainerConfig&)> fallback;
  std::uint64_t seed = 0;
};

enum class SimEventKind {
  NetworkCreated,
  NetworkRemoved,
  CreateFailed,
  Created,
  StartFailed,
  Started,
  FileWritten,
  Exited,
  Stopped,
  Removed,
};

std::string_view to_string(SimEventKind kind);

struct SimEvent {
  Instant at{0};
  SimEventKind kind = SimEventKind::Created;
  std::string name;  // container or network name
  std::string game;  // arena.game label, empty for networks
  int slot = -1;
  double cpus = 0.0;
  int exit_code = 0;
  std::string detail;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

// Deterministic in-process container runtime driven by a manual clock.
// Time only moves through advance(); started containers exit after their
// planned duration and materialize planned files into the host side of
// their mounts. Same script + seed + call sequence gives the same events.
class SimRuntime final : public Runtime {
 public:
  explicit SimRuntime(SimScript script = {});

  void set_script(SimScript script);
  void set_plan(const std::string& container_name, ContainerPlan plan);
  // Simulates the daemon being unreachable.
  void set_available(bool available);
  // When set, create() fails with ImageMissing for any other image.
  void set_known_images(std::optional<std::set<std::string>> images);

  Instant now() const;
  void advance(std::chrono::milliseconds d);

  std::vector<SimEvent> events() const;
  void clear_events();
  std::optional<ContainerConfig> config_of(const ContainerHandle& h) const;
  std::size_t container_count() const;
  // Host ports bound by containers that still exist.
  std::set<int> bound_host_ports() const;

  // Persists containers, networks, clock and counters (not the event log or
  // fallback function). Used by the CLI to keep sim state between runs.
  void save_state(const std::filesystem::path& path) const;
  void load_state(const std::filesystem::path& path);

  std::string ensure_network(const std::string& name) override;
  void remove_network(const std::string& name) override;
  std::vector<std::string> list_networks(std::string_view name_prefix) override;
  ContainerHandle create(const ContainerConfig& cfg) override;
  void start(const ContainerHandle& h) override;
  void stop(const ContainerHandle& h, int grace_s) override;
  void remove(const ContainerHandle& h) override;
  ContainerStatus inspect(const ContainerHandle& h) override;
  std::vector<ContainerHandle> list_by_label(const std::string& key, const std::string& value) override;
  std::vector<ContainerHandle> list_with_label(const std::string& key) override;

 private:
  struct Container {
    std::uint64_t seq = 0;
    ContainerHandle handle;
    ContainerConfig config;
    ContainerPlan plan;
    ContainerStatus status;
    Instant started_at{0};
    std::vector<bool> written;
  };

  void require_available() const;
  Container* find(const ContainerHandle& h);
  const Container* find(const ContainerHandle& h) const;
  void record(SimEventKind kind, const Container& c, int exit_code = 0, std::string detail = {});
  void write_file(Container& c, std::size_t index);
  void exit_container(Container& c, int code, SimEventKind kind);
  std::string next_id();

  mutable std::mutex mutex_;
  SimScript script_;
  bool available_ = true;
  std::optional<std::set<std::string>> known_images_;
  Instant now_{0};
  std::uint64_t counter_ = 0;
  std::map<std::string, Container> containers_;  // by id
  std::map<std::string, std::string> networks_;  // name -> id
  std::vector<SimEvent> events_;
};

class SimClock final : public Clock {
 public:
  explicit SimClock(SimRuntime& runtime) : runtime_(runtime) {}
  Instant now() const override { return runtime_.now(); }
  void sleep_for(std::chrono::milliseconds d) override { runtime_.advance(d); }

 private:
  SimRuntime& runtime_;
};

// A plausible game for containers launched by the lifecycle: reads the
// injected env vars, lets slot 0 signal readiness after one second, and has
// every player write its result file at the end. The winner and game length
// are derived from (seed, game name), so every slot agrees on them.
ContainerPlan default_game_plan(const ContainerConfig& cfg, std::uint64_t seed);

// SimScript whose fallback is default_game_plan.
SimScript default_game_script(std::uint64_t seed);

// 64-bit mixing function used for deterministic ids and choices.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view text);

}  // namespace arena
