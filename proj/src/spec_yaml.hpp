#pragma once

// YAML helpers shared by match spec and deployment plan parsing.

#include <set>
#include <string>
#include <string_view>

#include <yaml-cpp/yaml.h>

#include "arena/config.hpp"

namespace arena::detail {

YAML::Node load_yaml(std::string_view text);

// extra_keys are tolerated at the top level (plan files add their own).
MatchSpec match_spec_from_yaml(const YAML::Node& root, const std::set<std::string>& extra_keys);

void emit_match_spec(YAML::Emitter& out, const MatchSpec& spec);

}  // namespace arena::detail
