#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mcp/config.hpp"
#include "mcp/infotheory.hpp"

namespace mcp {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNoConvergence = 2, kExitPropertyFailure = 3 };

struct CommandOutput {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

/// "# mcp <command> config_hash=<16 hex> seed=<n>"
std::string csv_header(const ExperimentConfig& cfg, std::string_view command, std::uint64_t seed);

/// Seed of sweep point `index`, independent of evaluation order.
std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index);

struct Table2Row {
  int size = 0;
  std::string signaling;
  MiEstimate without;  // identity channel
  MiEstimate with;     // all-unity channel
  double loss_bits() const { return without.bits - with.bits; }
};
/// Rows in size order, BPSK before QPSK. Quadrature for n <= 2, Monte Carlo
/// with `base.samples` otherwise.
std::vector<Table2Row> table2_rows(const Table2Config& t, const Integrator& base, std::uint64_t seed);

struct PropertyCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
};
std::vector<PropertyCheck> run_property_checks(const CheckConfig& c, std::uint64_t seed);

CommandOutput cmd_mi(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
CommandOutput cmd_table2(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
CommandOutput cmd_power(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
CommandOutput cmd_precode(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
CommandOutput cmd_sim(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
CommandOutput cmd_check(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace mcp
