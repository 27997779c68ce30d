#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "arena/config.hpp"
#include "arena/registry.hpp"

namespace arena {

// Container-side mount points; the in-container wrapper relies on these.
namespace mount_point {
inline constexpr const char* kMaps = "/app/sc/maps";
inline constexpr const char* kBots = "/app/sc/bots";
inline constexpr const char* kBwapiData = "/app/sc/bwapi-data";
inline constexpr const char* kWrite = "/app/sc/write";
inline constexpr const char* kBwtaCache = "/app/sc/bwta-cache";
}  // namespace mount_point

// Host-side ("master") directory tree:
//   <base>/maps/  <base>/bots/<bot_name>/  <base>/bwapi-data/
//   <base>/bwta-cache/  <base>/games/<game_name>/write_<slot>/
class VolumeLayout {
 public:
  VolumeLayout() = default;
  // base_dir is made absolute and normalized.
  explicit VolumeLayout(const std::filesystem::path& base_dir);

  const std::filesystem::path& base_dir() const { return base_; }
  std::filesystem::path maps_dir() const { return base_ / "maps"; }
  std::filesystem::path bots_dir() const { return base_ / "bots"; }
  std::filesystem::path bwapi_data_dir() const { return base_ / "bwapi-data"; }
  std::filesystem::path bwta_cache_dir() const { return base_ / "bwta-cache"; }
  std::filesystem::path games_dir() const { return base_ / "games"; }
  std::filesystem::path game_dir(const std::string& game_name) const;
  std::filesystem::path write_dir(const std::string& game_name, int slot) const;
  std::filesystem::path bot_dir(const std::string& bot_name) const;

  // True when `p`, normalized, lies strictly below base_dir.
  bool contains(const std::filesystem::path& p) const;

  friend bool operator==(const VolumeLayout&, const VolumeLayout&) = default;

 private:
  std::filesystem::path base_;
};

struct Mount {
  std::filesystem::path host_path;
  std::string container_path;
  bool read_only = false;

  friend bool operator==(const Mount&, const Mount&) = default;
};

// Creates the shared dirs and one write dir per slot. Idempotent.
// Throws Error{Io}.
VolumeLayout prepare_layout(const std::filesystem::path& base_dir, const MatchSpec& spec);

// maps, bots, bwapi-data read-only; bwta-cache shared read-write; private write dir.
// Throws Error{SlotOutOfRange}.
std::vector<Mount> mounts_for_slot(const VolumeLayout& layout, const MatchSpec& spec, int slot);

// Copies the package binary to bots_dir/<bot_name>/<bot_file>, writing only
// when the existing file's checksum differs. Throws Error{Io}.
std::filesystem::path install_bot_files(const VolumeLayout& layout, const BotPackage& pkg);

// Every regular file under each write_<slot> of the game, sorted by (slot, path).
std::vector<std::pair<int, std::filesystem::path>> collect_artifacts(const VolumeLayout& layout,
                                                                     const std::string& game_name);

// Map paths relative to maps_dir (generic '/' separators).
std::set<std::string> list_maps(const VolumeLayout& layout);

// Files the in-container wrapper drops into its write dir.
inline std::string result_file_name(const std::string& game_name) { return game_name + "_result.json"; }
inline std::string host_ready_file_name(const std::string& game_name) { return game_name + "_host_ready"; }

// Path a player's bot binary is expected at on the host.
std::filesystem::path installed_bot_path(const VolumeLayout& layout, const PlayerSlot& player);

}  // namespace arena
