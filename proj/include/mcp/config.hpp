#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcp/constellation.hpp"
#include "mcp/coopsim.hpp"
#include "mcp/infotheory.hpp"
#include "mcp/power.hpp"
#include "mcp/precoder.hpp"
#include "mcp/types.hpp"

namespace mcp {

enum class PrecodeMode { Compare, Algorithm2, HighSnr, LowSnr };
enum class SessionDirection { Uplink, Downlink };

struct PrecodeConfig {
  PrecodeMode mode = PrecodeMode::Compare;
  double trace_budget = 1.0;
  double snr_db = 10.0;  // operating point for algorithm2 / highsnr
  /// Named matrices for compare mode, in file order.
  std::vector<std::pair<std::string, CMatrix>> matrices;
  HighSnrParams highsnr;
  Algorithm2Params algorithm2;
  RVector initial_powers;  // algorithm2 start V_H diag(sqrt(P))
};

struct SessionConfig {
  SessionDirection direction = SessionDirection::Uplink;
  BackhaulLink link;
  double resources_bs1 = 1.0;
  double resources_bs2 = 1.0;
};

struct Table2Config {
  double snr_db = 25.0;
  std::vector<int> sizes{2, 3, 4};
  /// Monte Carlo sample floor for the 4x4 QPSK rows.
  std::size_t sample_floor = 100000;
};

struct CheckConfig {
  std::size_t channels = 5;
  /// Factor applied to the complex gradient before comparing with finite
  /// differences of real parameters. Anything but 2 should fail.
  double gradient_factor = kRealParameterGradientFactor;
};

/// Parsed "mcp.config/1" document. All snr values are stored in dB, as read.
struct ExperimentConfig {
  static constexpr std::string_view kSchema = "mcp.config/1";

  std::string scenario;
  CMatrix h;
  std::vector<std::string> input_names;
  std::vector<Constellation> inputs;
  std::vector<double> snr_db;
  Integrator integrator;
  std::optional<std::uint64_t> seed;
  RVector caps;
  PowerSolveParams power;
  PrecodeConfig precode;
  SessionConfig session;
  Table2Config table2;
  CheckConfig check;
  std::string out_dir = "out";
  /// FNV-1a of the raw config text.
  std::uint64_t config_hash = 0;

  /// Seed for Monte Carlo work; ConfigError when absent and `needed`.
  std::uint64_t require_seed(bool needed) const;
  /// Applies a command-line seed everywhere a seed is consumed.
  void override_seed(std::uint64_t s);
  /// True when the integrator may fall back to Monte Carlo.
  bool may_use_monte_carlo() const;
};

std::uint64_t fnv1a(std::string_view text);

/// Throws Error(ConfigError) with "origin:line: field: message".
ExperimentConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace mcp
