#pragma once

#include <mutex>
#include <set>
#include <span>
#include <vector>

namespace arena {

inline constexpr int kDefaultVncBasePort = 5900;
inline constexpr int kMaxPort = 65535;

// Hands out host ports for VNC bindings. Ports handed out stay reserved
// until released, so concurrent headful matches never collide.
class PortAllocator {
 public:
  virtual ~PortAllocator() = default;

  // n consecutive free ports starting at the lowest usable port ≥ base.
  // Throws Error{PortExhausted}.
  std::vector<int> allocate(int n, int base);
  void release(std::span<const int> ports);
  std::set<int> reserved() const;

 protected:
  // Whether the host itself has `port` free (ignoring our own reservations).
  virtual bool host_port_free(int port) const = 0;

 private:
  mutable std::mutex mutex_;
  std::set<int> reserved_;
};

// Probes by binding a TCP socket on all interfaces.
class LocalPortAllocator final : public PortAllocator {
 protected:
  bool host_port_free(int port) const override;
};

// Pure bookkeeping; `occupied` stands in for ports taken by other programs.
class SimPortAllocator final : public PortAllocator {
 public:
  explicit SimPortAllocator(std::set<int> occupied = {}) : occupied_(std::move(occupied)) {}
  void occupy(int port) {
    std::lock_guard lock(mutex_);
    occupied_.insert(port);
  }

 protected:
  bool host_port_free(int port) const override {
    std::lock_guard lock(mutex_);
    return !occupied_.contains(port);
  }

 private:
  mutable std::mutex mutex_;
  std::set<int> occupied_;
};

std::vector<int> allocate_vnc_ports(int n, int base, PortAllocator& allocator);

}  // namespace arena
