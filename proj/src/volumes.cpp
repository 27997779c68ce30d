#include "arena/volumes.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <unistd.h>

#include "arena/digest.hpp"
#include "arena/error.hpp"

namespace arena {

namespace fs = std::filesystem;

namespace {

void require_identifier(const std::string& name, const char* what) {
  if (!is_identifier(name)) {
    throw Error(ErrorKind::Validation, fmt::format("{} '{}' is not a safe identifier", what, name));
  }
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) {
    throw Error(ErrorKind::Io, fmt::format("cannot create {}: {}", p.string(),
                                           ec ? ec.message() : "not a directory"));
  }
  // create_directories succeeds on an existing dir even when it is read-only;
  // probe writability so an unusable base surfaces here, not mid-match.
  if (::access(p.c_str(), W_OK) != 0) {
    throw Error(ErrorKind::Io, fmt::format("{} is not writable", p.string()));
  }
}

}  // namespace

VolumeLayout::VolumeLayout(const fs::path& base_dir)
    : base_(fs::absolute(base_dir).lexically_normal()) {
  if (!base_.has_filename() && base_.has_relative_path()) base_ = base_.parent_path();
}

fs::path VolumeLayout::game_dir(const std::string& game_name) const {
  require_identifier(game_name, "game_name");
  return games_dir() / game_name;
}

fs::path VolumeLayout::write_dir(const std::string& game_name, int slot) const {
  if (slot < 0) throw Error(ErrorKind::SlotOutOfRange, std::to_string(slot));
  return game_dir(game_name) / fmt::format("write_{}", slot);
}

fs::path VolumeLayout::bot_dir(const std::string& bot_name) const {
  require_identifier(bot_name, "bot_name");
  return bots_dir() / bot_name;
}

bool VolumeLayout::contains(const fs::path& p) const {
  auto norm = fs::absolute(p).lexically_normal();
  auto rel = norm.lexically_relative(base_);
  if (rel.empty() || rel == ".") return false;
  return *rel.begin() != "..";
}

VolumeLayout prepare_layout(const fs::path& base_dir, const MatchSpec& spec) {
  VolumeLayout layout(base_dir);
  for (const auto& dir : {layout.maps_dir(), layout.bots_dir(), layout.bwapi_data_dir(),
                          layout.bwta_cache_dir()}) {
    make_dir(dir);
  }
  for (const auto& p : spec.players) make_dir(layout.write_dir(spec.game_name, p.slot));
  return layout;
}

std::vector<Mount> mounts_for_slot(const VolumeLayout& layout, const MatchSpec& spec, int slot) {
  if (slot < 0 || static_cast<std::size_t>(slot) >= spec.players.size()) {
    throw Error(ErrorKind::SlotOutOfRange,
                fmt::format("slot {} not in a {}-player match", slot, spec.players.size()));
  }
  std::vector<Mount> mounts{
      {layout.maps_dir(), mount_point::kMaps, true},
      {layout.bots_dir(), mount_point::kBots, true},
      {layout.bwapi_data_dir(), mount_point::kBwapiData, true},
      {layout.bwta_cache_dir(), mount_point::kBwtaCache, false},
      {layout.write_dir(spec.game_name, slot), mount_point::kWrite, false},
  };
  for (const auto& m : mounts) {
    if (!layout.contains(m.host_path)) {
      throw Error(ErrorKind::Validation, fmt::format("mount {} escapes base dir", m.host_path.string()));
    }
  }
  return mounts;
}

fs::path installed_bot_path(const VolumeLayout& layout, const PlayerSlot& player) {
  return layout.bot_dir(player.bot_name) / player.bot_file;
}

fs::path install_bot_files(const VolumeLayout& layout, const BotPackage& pkg) {
  auto target_dir = layout.bot_dir(pkg.meta.name);
  auto target = target_dir / pkg.local_path.filename();
  std::error_code ec;
  if (fs::is_regular_file(target, ec) && sha256_file(target) == sha256_file(pkg.local_path)) {
    return target;
  }
  make_dir(target_dir);
  auto tmp = target_dir / (target.filename().string() + ".tmp");
  fs::copy_file(pkg.local_path, tmp, fs::copy_options::overwrite_existing, ec);
  if (!ec) fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, fmt::format("install {} failed", target.string()));
  }
  return target;
}

std::vector<std::pair<int, fs::path>> collect_artifacts(const VolumeLayout& layout,
                                                        const std::string& game_name) {
  std::vector<std::pair<int, fs::path>> out;
  std::error_code ec;
  auto game = layout.game_dir(game_name);
  if (!fs::is_directory(game, ec)) return out;
  for (const auto& entry : fs::directory_iterator(game, ec)) {
    auto name = entry.path().filename().string();
    if (!entry.is_directory() || !name.starts_with("write_")) continue;
    int slot = 0;
    try {
      std::size_t used = 0;
      slot = std::stoi(name.substr(6), &used);
      if (used != name.size() - 6) continue;
    } catch (const std::exception&) {
      continue;
    }
    for (const auto& f : fs::recursive_directory_iterator(entry.path(), ec)) {
      if (f.is_regular_file()) out.emplace_back(slot, f.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::set<std::string> list_maps(const VolumeLayout& layout) {
  std::set<std::string> maps;
  std::error_code ec;
  if (!fs::is_directory(layout.maps_dir(), ec)) return maps;
  for (const auto& f : fs::recursive_directory_iterator(layout.maps_dir(), ec)) {
    if (f.is_regular_file()) maps.insert(f.path().lexically_relative(layout.maps_dir()).generic_string());
  }
  return maps;
}

}  // namespace arena
