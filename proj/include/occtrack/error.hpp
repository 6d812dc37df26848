#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace occtrack {

enum class ErrorKind {
  InvalidArgument,
  BehindCamera,
  FullyBehindCamera,
  OffsetOutOfRange,
  NonFiniteWeight,
  MissingPyramid,
  ChannelMismatch,
  OddChannelCount,
  LengthMismatch,
  NonPositiveGT,
  IndexOutOfRange,
  MissingIdentity,
  DegenerateGallery,
  NonMonotonicTimestamps,
  InvalidWaypoints,
  FrameCountMismatch,
  ConfigParseError,
  UnknownSubcommand,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. `kind()` identifies the failure class so callers
/// (and the CLI's exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace occtrack
