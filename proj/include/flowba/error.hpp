// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_ERROR_HPP
#define FLOWBA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace flowba {

enum class ErrorCode {
  DepthBehindCamera,
  NonPositiveDepth,
  EmptySystem,
  SingularSystem,
  MaxDampingExceeded,
  NoNeighbors,
  TooFewPairs,
  EmptyCloud,
  ParseError,
  NonUnitQuaternion,
  IoError,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

// Single exception type carrying a machine-parseable code. The CLI prints
// errors as one line "error: E/<CodeName>: <message>" and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string("E/") + error_code_name(code) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DepthBehindCamera: return "DepthBehindCamera";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::EmptySystem: return "EmptySystem";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MaxDampingExceeded: return "MaxDampingExceeded";
    case ErrorCode::NoNeighbors: return "NoNeighbors";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace flowba

#endif  // FLOWBA_ERROR_HPP
