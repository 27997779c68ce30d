#include "arena/ports.hpp"

#include <fmt/format.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "arena/error.hpp"

namespace arena {

std::vector<int> PortAllocator::allocate(int n, int base) {
  if (n < 1) throw Error(ErrorKind::Validation, "need at least one port");
  if (base < 1 || base > kMaxPort) throw Error(ErrorKind::Validation, fmt::format("bad base port {}", base));
  std::lock_guard lock(mutex_);
  auto usable = [&](int p) { return !reserved_.contains(p) && host_port_free(p); };
  for (int start = base; start + n - 1 <= kMaxPort; ++start) {
    int k = 0;
    while (k < n && usable(start + k)) ++k;
    if (k == n) {
      std::vector<int> ports;
      for (int i = 0; i < n; ++i) {
        ports.push_back(start + i);
        reserved_.insert(start + i);
      }
      return ports;
    }
    start += k;  // start+k is unusable; resume just past it
  }
  throw Error(ErrorKind::PortExhausted, fmt::format("no {} consecutive free ports from {}", n, base));
}

void PortAllocator::release(std::span<const int> ports) {
  std::lock_guard lock(mutex_);
  for (int p : ports) reserved_.erase(p);
}

std::set<int> PortAllocator::reserved() const {
  std::lock_guard lock(mutex_);
  return reserved_;
}

bool LocalPortAllocator::host_port_free(int port) const {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0;
  ::close(fd);
  return ok;
}

std::vector<int> allocate_vnc_ports(int n, int base, PortAllocator& allocator) {
  return allocator.allocate(n, base);
}

}  // namespace arena
