#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "arena/config.hpp"
#include "arena/volumes.hpp"

namespace arena::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("arena-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline MatchSpec make_spec(const std::string& game, int players, const std::string& map = "m.scx") {
  MatchSpec spec;
  spec.game_name = game;
  spec.map = map;
  for (int i = 0; i < players; ++i) {
    auto name = "bot" + std::to_string(i);
    spec.players.push_back({i, name, Race::Terran, name + ".dll"});
  }
  return spec;
}

// Puts the map and placeholder binaries for every player under `base`.
inline void stage_inputs(const std::filesystem::path& base, const MatchSpec& spec) {
  VolumeLayout layout(base);
  write_file(layout.maps_dir() / spec.map, "map");
  for (const auto& p : spec.players) write_file(layout.bot_dir(p.bot_name) / p.bot_file, "bin:" + p.bot_name);
}

}  // namespace arena::testing
