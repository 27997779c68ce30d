#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "arena/config.hpp"

namespace arena {

struct BotMetadata {
  std::string name;
  Race race = Race::Random;
  BotType bot_type = BotType::BwapiModule;
  std::string binary_url;
  std::string sha256;

  // File name the bot is stored and launched under: "<name>.<ext>".
  std::string bot_file() const { return name + "." + std::string(extension_of(bot_type)); }

  friend bool operator==(const BotMetadata&, const BotMetadata&) = default;
};

struct BotPackage {
  BotMetadata meta;
  std::filesystem::path local_path;
  std::chrono::system_clock::time_point fetched_at;
};

// Parses the `GET /bots` payload. Throws Error{Protocol} on schema mismatch.
std::vector<BotMetadata> parse_bot_list(std::string_view json_text);
std::string render_bot_list(const std::vector<BotMetadata>& bots);

// Client for the bot registry HTTP protocol:
//   GET <registry_url>/bots  -> [{name, race, botType, binaryUrl, sha256}, ...]
//   GET <binaryUrl>          -> raw bytes with Content-Length
//
// The cache is content addressed: <cache_dir>/<sha256>/<bot_file>, with a
// sidecar <cache_dir>/<sha256>/meta.json recording name and fetched_at.
class RegistryClient {
 public:
  using TimeSource = std::function<std::chrono::system_clock::time_point()>;

  explicit RegistryClient(std::string registry_url, TimeSource now = {});

  const std::string& url() const { return registry_url_; }

  std::vector<BotMetadata> list_bots() const;

  // Cache hit performs no network traffic. Throws Error{Network},
  // Error{Protocol} or Error{ChecksumMismatch}; on failure nothing is cached.
  BotPackage fetch_bot(const BotMetadata& meta, const std::filesystem::path& cache_dir);

 private:
  std::mutex& digest_mutex(const std::string& sha256);

  std::string registry_url_;
  TimeSource now_;
  std::mutex table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> digest_mutexes_;
};

// Looks up a verified package already in the cache without touching the network.
std::optional<BotPackage> find_cached(const BotMetadata& meta, const std::filesystem::path& cache_dir);

// Keeps the newest keep_latest_n_per_bot versions (by fetched_at) of every
// bot name and deletes the rest. Returns the number of versions removed.
std::size_t purge_cache(const std::filesystem::path& cache_dir, int keep_latest_n_per_bot);

// Rehashes every cached binary; returns the digests whose content no longer matches.
std::vector<std::string> audit_cache(const std::filesystem::path& cache_dir);

}  // namespace arena
