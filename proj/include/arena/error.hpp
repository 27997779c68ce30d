#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arena {

enum class ErrorKind {
  Syntax,
  Validation,
  UnsupportedBotType,
  MapNotFound,
  Io,
  SlotOutOfRange,
  Network,
  Protocol,
  ChecksumMismatch,
  RuntimeUnavailable,
  NameConflict,
  ImageMissing,
  NotFound,
  AlreadyRunning,
  StillRunning,
  Provision,
  HostStartTimeout,
  PortExhausted,
};

std::string_view to_string(ErrorKind kind);

// Every failure surfaced by the library is an arena::Error carrying a kind,
// so callers can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace arena
