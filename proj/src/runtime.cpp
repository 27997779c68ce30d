#include "arena/runtime.hpp"

#include <thread>

#include <fmt/format.h>

#include "arena/error.hpp"

namespace arena {

Instant SystemClock::now() const {
  return std::chrono::duration_cast<Instant>(std::chrono::system_clock::now().time_since_epoch());
}

void SystemClock::sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

std::string ContainerConfig::env_value(std::string_view key) const {
  for (const auto& kv : env) {
    if (kv.size() > key.size() && kv.compare(0, key.size(), key) == 0 && kv[key.size()] == '=') {
      return kv.substr(key.size() + 1);
    }
  }
  return {};
}

void check_container_config(const ContainerConfig& cfg) {
  if (cfg.name.empty()) throw Error(ErrorKind::Validation, "container name empty");
  if (!cfg.labels.contains(kGameLabel) || !cfg.labels.contains(kSlotLabel)) {
    throw Error(ErrorKind::Validation,
                fmt::format("container {} lacks {}/{} labels", cfg.name, kGameLabel, kSlotLabel));
  }
  if (!(cfg.cpus > 0.0)) throw Error(ErrorKind::Validation, "cpus must be > 0");
  if (cfg.memory_mib <= 0) throw Error(ErrorKind::Validation, "memory_mib must be > 0");
  if (cfg.image.name.empty() || cfg.image.tag.empty()) {
    throw Error(ErrorKind::Validation, "image name and tag must be non-empty");
  }
}

std::string_view to_string(ContainerStatus::State state) {
  switch (state) {
    case ContainerStatus::State::Created: return "Created";
    case ContainerStatus::State::Running: return "Running";
    case ContainerStatus::State::Exited: return "Exited";
    case ContainerStatus::State::NotFound: return "NotFound";
  }
  return "NotFound";
}

std::string describe(const ContainerStatus& status) {
  if (status.state == ContainerStatus::State::Exited) return fmt::format("Exited({})", status.exit_code);
  return std::string(to_string(status.state));
}

}  // namespace arena
