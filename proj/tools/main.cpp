#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "paylift/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"payload placement analysis and closed-loop simulation"};
  app.set_version_flag("--version", std::string(paylift::tool_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool corrupt_riccati = false;
  bool seed_given = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file")
        ->required();
    sub->add_option("--out", out_dir,
                    "output directory (overrides the configured one)");
    sub->add_option("--seed", seed, "noise seed (overrides the configured one)")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--jobs", jobs, "worker threads for sweeps")
        ->check(CLI::PositiveNumber);
  };

  add_common(app.add_subcommand(
      "analyze", "stability, noise gains, and optimal placement report"));
  add_common(app.add_subcommand(
      "simulate", "trajectory CSVs for the configured scenario"));
  add_common(app.add_subcommand(
      "sweep", "placement grid and mirror-gap CSV tables"));
  CLI::App* validate = app.add_subcommand(
      "validate", "built-in consistency suite with a pass/fail table");
  add_common(validate);
  validate
      ->add_flag("--corrupt-riccati", corrupt_riccati,
                 "negative control: perturb the Riccati solutions so the "
                 "residual check must fail")
      ->group("");  // self-test hook, hidden from --help

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return paylift::kExitConfigError;
  }

  paylift::RunConfig config;
  try {
    config = paylift::load_run_config(config_path);
  } catch (const paylift::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return paylift::kExitConfigError;
  }

  paylift::CliOptions options;
  options.out_dir = out_dir;
  options.has_seed = seed_given;
  options.seed = seed;
  options.jobs = jobs;
  options.corrupt_riccati = corrupt_riccati;
  return paylift::run_command(app.get_subcommands().front()->get_name(),
                              config, options);
}
