#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "arena/config.hpp"
#include "arena/volumes.hpp"

namespace arena {

// Milliseconds since the clock's epoch (Unix epoch for the system clock,
// simulation start for the simulated one).
using Instant = std::chrono::milliseconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Instant now() const = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  Instant now() const override;
  void sleep_for(std::chrono::milliseconds d) override;
};

inline constexpr const char* kGameLabel = "arena.game";
inline constexpr const char* kSlotLabel = "arena.slot";
inline constexpr int kVncContainerPort = 5900;

struct PortBinding {
  int container_port = 0;
  int host_port = 0;

  friend bool operator==(const PortBinding&, const PortBinding&) = default;
};

struct ContainerConfig {
  std::string name;
  ImageRef image;
  std::vector<std::string> env;  // KEY=VALUE, order preserved
  std::vector<Mount> mounts;
  std::string network;
  double cpus = 1.0;
  int memory_mib = 2048;
  std::vector<PortBinding> port_bindings;
  std::map<std::string, std::string> labels;

  // Value of env var `key`, empty when absent.
  std::string env_value(std::string_view key) const;

  friend bool operator==(const ContainerConfig&, const ContainerConfig&) = default;
};

// Throws Error{Validation} when labels, name or limits are unusable.
void check_container_config(const ContainerConfig& cfg);

struct ContainerHandle {
  std::string id;
  std::string name;

  friend bool operator==(const ContainerHandle&, const ContainerHandle&) = default;
};

struct ContainerStatus {
  enum class State { Created, Running, Exited, NotFound };

  State state = State::NotFound;
  Instant since{0};   // Running only
  int exit_code = 0;  // Exited only

  static ContainerStatus created() { return {State::Created, Instant{0}, 0}; }
  static ContainerStatus running(Instant since) { return {State::Running, since, 0}; }
  static ContainerStatus exited(int code) { return {State::Exited, Instant{0}, code}; }
  static ContainerStatus not_found() { return {State::NotFound, Instant{0}, 0}; }

  friend bool operator==(const ContainerStatus&, const ContainerStatus&) = default;
};

std::string_view to_string(ContainerStatus::State state);
std::string describe(const ContainerStatus& status);

// The narrow container-runtime surface everything above it is written
// against. Implementations must be safe for concurrent calls.
class Runtime {
 public:
  virtual ~Runtime() = default;

  // Idempotent; returns the network id. Throws Error{RuntimeUnavailable}.
  virtual std::string ensure_network(const std::string& name) = 0;
  // Missing network is not an error.
  virtual void remove_network(const std::string& name) = 0;
  virtual std::vector<std::string> list_networks(std::string_view name_prefix) = 0;

  // Throws Error{NameConflict}, Error{ImageMissing}, Error{RuntimeUnavailable}.
  virtual ContainerHandle create(const ContainerConfig& cfg) = 0;
  // Throws Error{NotFound}, Error{AlreadyRunning}.
  virtual void start(const ContainerHandle& h) = 0;
  // Idempotent on exited containers. Throws Error{NotFound}.
  virtual void stop(const ContainerHandle& h, int grace_s) = 0;
  // Missing container is not an error. Throws Error{StillRunning}.
  virtual void remove(const ContainerHandle& h) = 0;
  // Never blocks on the container; unknown handles report NotFound.
  virtual ContainerStatus inspect(const ContainerHandle& h) = 0;
  virtual std::vector<ContainerHandle> list_by_label(const std::string& key,
                                                     const std::string& value) = 0;
  // Every container carrying `key`, whatever its value.
  virtual std::vector<ContainerHandle> list_with_label(const std::string& key) = 0;
};

}  // namespace arena
