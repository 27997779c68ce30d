#include "arena/error.hpp"

namespace arena {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::UnsupportedBotType: return "UnsupportedBotType";
    case ErrorKind::MapNotFound: return "MapNotFound";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::SlotOutOfRange: return "SlotOutOfRange";
    case ErrorKind::Network: return "NetworkError";
    case ErrorKind::Protocol: return "ProtocolError";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::RuntimeUnavailable: return "RuntimeUnavailable";
    case ErrorKind::NameConflict: return "NameConflict";
    case ErrorKind::ImageMissing: return "ImageMissing";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::AlreadyRunning: return "AlreadyRunning";
    case ErrorKind::StillRunning: return "StillRunning";
    case ErrorKind::Provision: return "ProvisionError";
    case ErrorKind::HostStartTimeout: return "HostStartTimeout";
    case ErrorKind::PortExhausted: return "PortExhausted";
  }
  return "Error";
}

}  // namespace arena
