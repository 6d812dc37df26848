#include "occtrack/error.hpp"

namespace occtrack {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::FullyBehindCamera: return "FullyBehindCamera";
    case ErrorKind::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorKind::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorKind::MissingPyramid: return "MissingPyramid";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::OddChannelCount: return "OddChannelCount";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NonPositiveGT: return "NonPositiveGT";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::MissingIdentity: return "MissingIdentity";
    case ErrorKind::DegenerateGallery: return "DegenerateGallery";
    case ErrorKind::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorKind::InvalidWaypoints: return "InvalidWaypoints";
    case ErrorKind::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorKind::ConfigParseError: return "ConfigParseError";
    case ErrorKind::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace occtrack
