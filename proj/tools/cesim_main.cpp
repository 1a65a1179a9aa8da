#include <CLI11.hpp>
#include <cstdint>

#include "cesim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"community energy storage trading simulator"};
  app.require_subcommand(1);

  cesim::cli::RunConfig config;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config.config_path, "scenario file");
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--seed", seed, "synthesis seed");
    cmd->add_option("--households", config.households,
                    "community size for synthesis");
    cmd->add_option("--participation", config.participation,
                    "participating fraction in (0, 1]");
    cmd->add_option("--tau", config.tau, "termination threshold");
    cmd->add_flag("--serial", config.serial, "disable parallel kernels");
  };

  CLI::App* run = app.add_subcommand("run", "solve one model (or all)");
  add_common(run);
  run->add_option("--model", config.model,
                  "baseline|centralized|benevolent|competitive|all");

  CLI::App* compare =
      app.add_subcommand("compare", "three models across participation");
  add_common(compare);
  compare->add_option("--fractions", config.fractions, "participation list")
      ->delimiter(',');

  CLI::App* sweep = app.add_subcommand("sweep", "capacity sensitivity");
  add_common(sweep);
  sweep->add_option("--model", config.model, "model or all");
  sweep->add_option("--capacity-list", config.capacity_list,
                    "capacities in kWh")
      ->delimiter(',');

  CLI::App* noise = app.add_subcommand("noise", "forecast-noise study");
  add_common(noise);
  noise->add_option("--variance-list", config.variance_list,
                    "noise variances in percent")
      ->delimiter(',');
  noise->add_option("--trials", config.trials, "Monte Carlo trials");

  CLI::App* validate = app.add_subcommand("validate", "config lint");
  add_common(validate);

  config.model = "competitive";
  sweep->get_option("--model")->default_str("all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cesim::cli::kExitConfigError;
  }

  config.seed = seed;
  config.synthesize = config.config_path.empty();
  if (sweep->parsed() && !sweep->get_option("--model")->count())
    config.model = "all";

  if (run->parsed()) return cesim::cli::cmd_run(config);
  if (compare->parsed()) return cesim::cli::cmd_compare(config);
  if (sweep->parsed()) return cesim::cli::cmd_sweep(config);
  if (noise->parsed()) return cesim::cli::cmd_noise(config);
  if (validate->parsed()) return cesim::cli::cmd_validate(config);
  return cesim::cli::kExitConfigError;
}
