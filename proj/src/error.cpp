#include "mcp/error.hpp"

#include <cmath>

#include "mcp/types.hpp"

namespace mcp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GaussianNotEnumerable: return "GaussianNotEnumerable";
    case ErrorCode::NonFiniteDeterminant: return "NonFiniteDeterminant";
    case ErrorCode::DegeneratePosterior: return "DegeneratePosterior";
    case ErrorCode::IntegratorBudgetTooSmall: return "IntegratorBudgetTooSmall";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::ZeroPowerCase: return "ZeroPowerCase";
    case ErrorCode::ZeroUpdate: return "ZeroUpdate";
    case ErrorCode::ZeroDmin: return "ZeroDmin";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoImprovement: return "NoImprovement";
  }
  return "Unknown";
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double snr) { return 10.0 * std::log10(snr); }

}  // namespace mcp
