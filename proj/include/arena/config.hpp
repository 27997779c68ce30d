#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace arena {

enum class Race { Terran, Protoss, Zerg, Random };

// How a bot binary talks to the game; decided by file extension only.
enum class BotType {
  BwapiModule,   // .dll, injected into the game process
  NativeClient,  // .exe, separate client process
  JavaClient,    // .jar, needs the Java image layer
};

std::string_view to_string(Race race);
Race parse_race(std::string_view text);

std::string_view to_string(BotType type);
// Lowercase extension without the dot: "dll", "exe" or "jar".
std::string_view extension_of(BotType type);
BotType parse_bot_type(std::string_view extension);

struct PlayerSlot {
  int slot = 0;
  std::string bot_name;
  Race race = Race::Random;
  std::string bot_file;

  friend bool operator==(const PlayerSlot&, const PlayerSlot&) = default;
};

struct ResourceLimits {
  double cpus = 1.0;
  int memory_mib = 2048;

  friend bool operator==(const ResourceLimits&, const ResourceLimits&) = default;
};

inline constexpr int kDefaultTimeoutSeconds = 3600;
inline constexpr int kMinMemoryMib = 256;
inline constexpr std::size_t kMinPlayers = 2;
inline constexpr std::size_t kMaxPlayers = 8;

struct MatchSpec {
  std::string game_name;
  std::string map;
  std::vector<PlayerSlot> players;
  bool headful = false;
  int timeout_s = kDefaultTimeoutSeconds;
  ResourceLimits limits;

  // Sum of per-slot CPU limits; what the scheduler charges against its budget.
  double cost() const { return limits.cpus * static_cast<double>(players.size()); }

  friend bool operator==(const MatchSpec&, const MatchSpec&) = default;
};

struct ImageRef {
  std::string name;
  std::string tag = "latest";

  std::string str() const { return name + ":" + tag; }
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

// Deployment-overridable image names for the two bot-facing layers.
struct ImageDefaults {
  ImageRef game{"starcraft", "game"};
  ImageRef java{"starcraft", "java"};
};

// `[A-Za-z0-9_-]{1,64}`; used for game and bot names that end up in paths.
bool is_identifier(std::string_view text);

// Parses a YAML match spec document and validates it.
// Throws Error{Syntax} on malformed YAML, Error{Validation} naming the field otherwise.
MatchSpec parse_match_spec(std::string_view text);

// Canonical YAML rendering; parse_match_spec(render_match_spec(s)) == s.
std::string render_match_spec(const MatchSpec& spec);

// Checks every MatchSpec invariant; throws Error{Validation}.
void validate_match_spec(const MatchSpec& spec);

BotType detect_bot_type(std::string_view bot_file);

ImageRef resolve_image(BotType type, bool headful, const ImageDefaults& images = {});

// Throws Error{MapNotFound} or Error{UnsupportedBotType}.
void validate_cross(const MatchSpec& spec, const std::set<std::string>& available_maps);

}  // namespace arena
