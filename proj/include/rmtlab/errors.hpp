#pragma once

#include <stdexcept>
#include <string>

namespace rmtlab {

enum class ErrorCode : int {
  Ok = 0,
  ParseError = 1,
  NotPSD = 2,
  FlavorConflict = 3,
  InvalidFlavor = 4,
  DimensionMismatch = 5,
  MissingCopy = 6,
  TooLarge = 7,
  OddSize = 8,
  ShapeMismatch = 9,
  NoP = 10,
  MixedModels = 11,
  TailBoundTooLarge = 12,
  NotSelfAdjoint = 13,
  NoConvergence = 14,
  ConfigError = 15,
  IoError = 16,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::FlavorConflict: return "FlavorConflict";
    case ErrorCode::InvalidFlavor: return "InvalidFlavor";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingCopy: return "MissingCopy";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::OddSize: return "OddSize";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoP: return "NoP";
    case ErrorCode::MixedModels: return "MixedModels";
    case ErrorCode::TailBoundTooLarge: return "TailBoundTooLarge";
    case ErrorCode::NotSelfAdjoint: return "NotSelfAdjoint";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rmtlab
