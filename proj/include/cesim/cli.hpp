#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cesim::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitSolverError = 2;

struct RunConfig {
  // Scenario source: exactly one of config_path / synthesize.
  std::string config_path;
  bool synthesize = false;
  std::uint64_t seed = 1;
  int households = 40;
  double participation = 0.4;

  std::string model = "competitive";  // or baseline|centralized|benevolent|all
  double tau = 0.002;
  std::string out_dir = ".";
  std::vector<double> fractions = {0.3, 0.4, 0.5};
  std::vector<double> capacity_list;
  std::vector<double> variance_list = {0.0, 10.0, 20.0, 30.0, 40.0, 50.0};
  int trials = 10;
  bool serial = false;  // force single-threaded execution
};

int cmd_run(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_sweep(const RunConfig& config);
int cmd_noise(const RunConfig& config);
int cmd_validate(const RunConfig& config);

}  // namespace cesim::cli
