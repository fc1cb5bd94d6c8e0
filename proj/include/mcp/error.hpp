#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcp {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  GaussianNotEnumerable,
  NonFiniteDeterminant,
  DegeneratePosterior,
  IntegratorBudgetTooSmall,
  SingularMatrix,
  ZeroPowerCase,
  ZeroUpdate,
  ZeroDmin,
  ConfigError,
  NoConvergence,
  NoImprovement,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. The CLI maps codes to exit
/// statuses and prints `to_string(code)` alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mcp
