#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "arena/registry.hpp"

namespace httplib {
class Server;
}

namespace arena {

// In-process HTTP server speaking the registry protocol on 127.0.0.1 with an
// ephemeral port. Counts every request so tests can assert cache behaviour.
class FakeRegistry {
 public:
  FakeRegistry();
  ~FakeRegistry();

  FakeRegistry(const FakeRegistry&) = delete;
  FakeRegistry& operator=(const FakeRegistry&) = delete;

  // Registers a bot whose binary is `bytes`; the advertised sha256 is computed
  // from those bytes. Returns the metadata as served by GET /bots.
  BotMetadata add_bot(const std::string& name, Race race, BotType type, std::string bytes);

  // Serve `bytes` for the binary instead of the registered ones (advertised
  // digest unchanged), simulating corruption or tampering.
  void corrupt_binary(const std::string& name, std::string bytes);

  // Replace the /bots payload verbatim (schema-violation tests).
  void override_listing(std::string raw_json);

  std::string url() const;
  int port() const { return port_; }

  std::size_t total_hits() const { return hits_.load(); }
  std::size_t binary_hits() const { return binary_hits_.load(); }
  void reset_hits();

 private:
  struct Entry {
    BotMetadata meta;
    std::string bytes;
    std::optional<std::string> served_bytes;
  };

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<std::string> order_;
  std::map<std::string, Entry> bots_;
  std::optional<std::string> listing_override_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> binary_hits_{0};
};

}  // namespace arena
