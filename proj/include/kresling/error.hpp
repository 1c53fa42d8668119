#pragma once

#include <stdexcept>
#include <string>

namespace kresling {

enum class ErrorCode {
  InvalidArgument,
  DegenerateGeometry,
  NonPositiveHeight,
  NumericalFailure,
  GapClosure,
  ShortTrajectory,
  RankTooLarge,
  ZeroReference,
  TooShort,
  InsufficientNeighbors,
  DegenerateInput,
  ConfigError,
  IoError
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NonPositiveHeight: return "NonPositiveHeight";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::GapClosure: return "GapClosure";
    case ErrorCode::ShortTrajectory: return "ShortTrajectory";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InsufficientNeighbors: return "InsufficientNeighbors";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kresling
