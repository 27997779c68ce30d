#include "arena/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <regex>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "arena/error.hpp"
#include "spec_yaml.hpp"

namespace arena {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::Validation, field + ": " + what);
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) invalid(field, "expected a scalar value");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    invalid(field, "wrong type");
  }
}

void reject_unknown_keys(const YAML::Node& node, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (!known.contains(key)) invalid(where + key, "unknown key");
  }
}

bool is_safe_relative_path(const std::string& text) {
  if (text.empty()) return false;
  std::filesystem::path p(text);
  if (p.is_absolute() || p.has_root_name() || p.has_root_directory()) return false;
  for (const auto& part : p) {
    if (part == ".." || part == ".") return false;
  }
  return true;
}

bool is_safe_filename(const std::string& text) {
  static const std::regex pattern("[A-Za-z0-9_.-]{1,128}");
  return std::regex_match(text, pattern) && text != "." && text != "..";
}

}  // namespace

std::string_view to_string(Race race) {
  switch (race) {
    case Race::Terran: return "Terran";
    case Race::Protoss: return "Protoss";
    case Race::Zerg: return "Zerg";
    case Race::Random: return "Random";
  }
  return "Random";
}

Race parse_race(std::string_view text) {
  auto l = lower(text);
  if (l == "terran") return Race::Terran;
  if (l == "protoss") return Race::Protoss;
  if (l == "zerg") return Race::Zerg;
  if (l == "random") return Race::Random;
  invalid("race", fmt::format("unknown race '{}'", text));
}

std::string_view to_string(BotType type) {
  switch (type) {
    case BotType::BwapiModule: return "BwapiModule";
    case BotType::NativeClient: return "NativeClient";
    case BotType::JavaClient: return "JavaClient";
  }
  return "BwapiModule";
}

std::string_view extension_of(BotType type) {
  switch (type) {
    case BotType::BwapiModule: return "dll";
    case BotType::NativeClient: return "exe";
    case BotType::JavaClient: return "jar";
  }
  return "dll";
}

BotType parse_bot_type(std::string_view extension) {
  auto l = lower(extension);
  if (l == "dll") return BotType::BwapiModule;
  if (l == "exe") return BotType::NativeClient;
  if (l == "jar") return BotType::JavaClient;
  throw Error(ErrorKind::UnsupportedBotType, fmt::format("extension '{}'", extension));
}

bool is_identifier(std::string_view text) {
  if (text.empty() || text.size() > 64) return false;
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

BotType detect_bot_type(std::string_view bot_file) {
  if (bot_file.empty()) throw Error(ErrorKind::Validation, "bot_file: empty");
  auto dot = bot_file.rfind('.');
  if (dot == std::string_view::npos || dot + 1 == bot_file.size()) {
    throw Error(ErrorKind::UnsupportedBotType, fmt::format("'{}' has no extension", bot_file));
  }
  return parse_bot_type(bot_file.substr(dot + 1));
}

ImageRef resolve_image(BotType type, bool /*headful*/, const ImageDefaults& images) {
  // GUI is switched by the HEADFUL env var inside the container, never by image.
  return type == BotType::JavaClient ? images.java : images.game;
}

void validate_match_spec(const MatchSpec& spec) {
  if (!is_identifier(spec.game_name)) invalid("game_name", "illegal character or length");
  if (!is_safe_relative_path(spec.map)) invalid("map", "must be a relative path without '..'");
  if (spec.players.size() < kMinPlayers) invalid("players", "need ≥2");
  if (spec.players.size() > kMaxPlayers) invalid("players", "at most 8");
  for (std::size_t i = 0; i < spec.players.size(); ++i) {
    const auto& p = spec.players[i];
    auto field = fmt::format("players[{}]", i);
    if (p.slot != static_cast<int>(i)) invalid(field + ".slot", "slots must be 0..n-1 in order");
    if (!is_identifier(p.bot_name)) invalid(field + ".bot_name", "illegal character or length");
    if (!is_safe_filename(p.bot_file)) invalid(field + ".bot_file", "illegal file name");
    try {
      detect_bot_type(p.bot_file);
    } catch (const Error&) {
      invalid(field + ".bot_file", "extension must be dll, exe or jar");
    }
  }
  if (spec.timeout_s <= 0) invalid("timeout_s", "must be > 0");
  if (!(spec.limits.cpus > 0.0)) invalid("limits.cpus", "must be > 0");
  if (spec.limits.memory_mib < kMinMemoryMib) invalid("limits.memory_mib", "must be ≥ 256");
}

namespace detail {

MatchSpec match_spec_from_yaml(const YAML::Node& root, const std::set<std::string>& extra_keys) {
  if (!root.IsMap()) throw Error(ErrorKind::Syntax, "match spec must be a mapping");
  std::set<std::string> known{"game_name", "map", "headful", "timeout_s", "limits", "players"};
  known.insert(extra_keys.begin(), extra_keys.end());
  reject_unknown_keys(root, known, "");

  MatchSpec spec;
  if (!root["game_name"]) invalid("game_name", "missing");
  spec.game_name = scalar_as<std::string>(root["game_name"], "game_name");
  if (!root["map"]) invalid("map", "missing");
  spec.map = scalar_as<std::string>(root["map"], "map");
  if (root["headful"]) spec.headful = scalar_as<bool>(root["headful"], "headful");
  if (root["timeout_s"]) spec.timeout_s = scalar_as<int>(root["timeout_s"], "timeout_s");
  if (const auto limits = root["limits"]) {
    if (!limits.IsMap()) invalid("limits", "expected a mapping");
    reject_unknown_keys(limits, {"cpus", "memory_mib"}, "limits.");
    if (limits["cpus"]) spec.limits.cpus = scalar_as<double>(limits["cpus"], "limits.cpus");
    if (limits["memory_mib"]) {
      spec.limits.memory_mib = scalar_as<int>(limits["memory_mib"], "limits.memory_mib");
    }
  }
  const auto players = root["players"];
  if (!players) invalid("players", "need ≥2");
  if (!players.IsSequence()) invalid("players", "expected a list");
  for (std::size_t i = 0; i < players.size(); ++i) {
    const auto& node = players[i];
    auto field = fmt::format("players[{}]", i);
    if (!node.IsMap()) invalid(field, "expected a mapping");
    reject_unknown_keys(node, {"slot", "bot_name", "race", "bot_file"}, field + ".");
    PlayerSlot p;
    p.slot = node["slot"] ? scalar_as<int>(node["slot"], field + ".slot") : static_cast<int>(i);
    if (!node["bot_name"]) invalid(field + ".bot_name", "missing");
    p.bot_name = scalar_as<std::string>(node["bot_name"], field + ".bot_name");
    if (node["race"]) p.race = parse_race(scalar_as<std::string>(node["race"], field + ".race"));
    if (!node["bot_file"]) invalid(field + ".bot_file", "missing");
    p.bot_file = scalar_as<std::string>(node["bot_file"], field + ".bot_file");
    spec.players.push_back(std::move(p));
  }
  validate_match_spec(spec);
  return spec;
}

void emit_match_spec(YAML::Emitter& out, const MatchSpec& spec) {
  out << YAML::Key << "game_name" << YAML::Value << spec.game_name;
  out << YAML::Key << "map" << YAML::Value << YAML::DoubleQuoted << spec.map;
  out << YAML::Key << "headful" << YAML::Value << spec.headful;
  out << YAML::Key << "timeout_s" << YAML::Value << spec.timeout_s;
  out << YAML::Key << "limits" << YAML::Value << YAML::BeginMap;
  // Shortest representation that reads back to the same double.
  out << YAML::Key << "cpus" << YAML::Value << fmt::format("{}", spec.limits.cpus);
  out << YAML::Key << "memory_mib" << YAML::Value << spec.limits.memory_mib;
  out << YAML::EndMap;
  out << YAML::Key << "players" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : spec.players) {
    out << YAML::BeginMap;
    out << YAML::Key << "slot" << YAML::Value << p.slot;
    out << YAML::Key << "bot_name" << YAML::Value << p.bot_name;
    out << YAML::Key << "race" << YAML::Value << std::string(to_string(p.race));
    out << YAML::Key << "bot_file" << YAML::Value << YAML::DoubleQuoted << p.bot_file;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

YAML::Node load_yaml(std::string_view text) {
  try {
    auto root = YAML::Load(std::string(text));
    if (!root || root.IsNull()) throw Error(ErrorKind::Syntax, "empty document");
    return root;
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::Syntax, e.what());
  }
}

}  // namespace detail

MatchSpec parse_match_spec(std::string_view text) {
  return detail::match_spec_from_yaml(detail::load_yaml(text), {});
}

std::string render_match_spec(const MatchSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  detail::emit_match_spec(out, spec);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void validate_cross(const MatchSpec& spec, const std::set<std::string>& available_maps) {
  if (!available_maps.contains(spec.map)) throw Error(ErrorKind::MapNotFound, spec.map);
  for (const auto& p : spec.players) detect_bot_type(p.bot_file);
}

}  // namespace arena
