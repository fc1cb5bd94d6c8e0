#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "mcp/config.hpp"
#include "mcp/error.hpp"
#include "mcp/experiments.hpp"

namespace {

using Command = std::function<mcp::CommandOutput(const mcp::ExperimentConfig&, const std::filesystem::path&)>;

int exit_for(mcp::ErrorCode code) {
  switch (code) {
    case mcp::ErrorCode::NoConvergence:
    case mcp::ErrorCode::NoImprovement:
      return mcp::kExitNoConvergence;
    default:
      return mcp::kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-cell cooperative MIMO experiments"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, Command>> commands{
      {"mi", {"MI and MMSE matrix over the snr grid", mcp::cmd_mi}},
      {"table2", {"MI with and without interference, 2x2 to 4x4", mcp::cmd_table2}},
      {"power", {"uplink power allocation", mcp::cmd_power}},
      {"precode", {"downlink precoder design and comparison", mcp::cmd_precode}},
      {"sim", {"cooperation protocol session", mcp::cmd_sim}},
      {"check", {"property checks", mcp::cmd_check}},
  };

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "experiment config (mcp.config/1 JSON)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory (default: config output.dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mcp::kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    mcp::ExperimentConfig cfg = mcp::load_config(config_path);
    if (seed) cfg.override_seed(*seed);
    const std::filesystem::path dir = out_dir ? std::filesystem::path(*out_dir) : std::filesystem::path(cfg.out_dir);
    const mcp::CommandOutput out = commands.at(name).second(cfg, dir);
    std::cout << out.summary;
    if (!out.summary.empty() && out.summary.back() != '\n') std::cout << '\n';
    for (const auto& f : out.files) std::cout << "wrote " << f.string() << '\n';
    return out.exit_code;
  } catch (const mcp::Error& e) {
    std::cerr << "mcp " << name << ": " << e.what() << '\n';
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "mcp " << name << ": " << e.what() << '\n';
    return mcp::kExitConfig;
  }
}
