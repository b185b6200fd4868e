#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppls {

enum class ErrorCode {
  DegenerateColumns,
  NotPositiveDefinite,
  DimensionMismatch,
  InvalidArgument,
  NearDegenerateComponents,
  NonSquareCrossBlock,
  ZeroVariance,
  RankDeficient,
  NegativeVariance,
  NonFiniteLikelihood,
  ComponentOutOfRange,
  TooManyFailedReplicates,
  ScenarioFailed,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error code. All library failures are
/// reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace ppls
