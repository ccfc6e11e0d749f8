#include <iostream>

#include "CLI11.hpp"

#include "stcate/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous effects of stochastic interventions on spatio-temporal point patterns"};
  app.require_subcommand(1);
  stcate::cli::CommandOptions options;
  std::uint64_t seed = 0;
  int threads = 1;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit-propensity", "Fit the log-linear treatment intensity model"},
      {"estimate", "Estimate heterogeneous effects with confidence intervals and tests"},
      {"simulate", "Run a simulation study from a scenario file"},
      {"oracle", "Compute Monte Carlo truth for a synthetic scenario"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", options.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Master seed override");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--paper-scale", options.paper_scale, "T = 500 and 500 replications");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stcate::cli::kExitConfig;
  }
  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) options.seed = seed;
  if (chosen->count("--threads") > 0) options.threads = threads;
  return stcate::cli::run_command(chosen->get_name(), options, std::cerr);
}
