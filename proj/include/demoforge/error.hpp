#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace demoforge {

enum class ErrorCode {
  InvalidPose,
  OutOfRange,
  ExtrapolationRefused,
  EmptyInput,
  DimMismatch,
  InvalidMap,
  EmptyAlignment,
  MissingEffector,
  MissingMask,
  NothingToAnchor,
  TrackMismatch,
  InsufficientLength,
  TooSmall,
  LengthMismatch,
  InvalidScript,
  InvalidObjectName,
  InvalidRole,
  InvalidEpisode,
  GenTimeout,
  ProtocolError,
  BadGeneration,
  EpisodeGenerationFailed,
  ConfigMismatch,
  IoError,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPose: return "InvalidPose";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ExtrapolationRefused: return "ExtrapolationRefused";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InvalidMap: return "InvalidMap";
    case ErrorCode::EmptyAlignment: return "EmptyAlignment";
    case ErrorCode::MissingEffector: return "MissingEffector";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::NothingToAnchor: return "NothingToAnchor";
    case ErrorCode::TrackMismatch: return "TrackMismatch";
    case ErrorCode::InsufficientLength: return "InsufficientLength";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidScript: return "InvalidScript";
    case ErrorCode::InvalidObjectName: return "InvalidObjectName";
    case ErrorCode::InvalidRole: return "InvalidRole";
    case ErrorCode::InvalidEpisode: return "InvalidEpisode";
    case ErrorCode::GenTimeout: return "GenTimeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::BadGeneration: return "BadGeneration";
    case ErrorCode::EpisodeGenerationFailed: return "EpisodeGenerationFailed";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
/// The message is prefixed with the code name so logs stay greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace demoforge
