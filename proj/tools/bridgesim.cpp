// bridgesim: run, validate and calibrate guided-bridge experiments.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gbridge/cli/runner.hpp"

int main(int argc, char** argv) {
  using namespace gbridge::cli;

  CLI::App app{"Guided bridge simulation for jump processes and diffusions"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> paths;
  std::optional<unsigned> threads;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--paths", paths, "Number of paths or chain iterations");
    sub->add_option("--threads", threads, "Worker threads (results do not depend on it)");
    sub->add_flag("--quiet", quiet, "Suppress progress output");
  };
  CLI::App* run = app.add_subcommand("run", "Simulate and write artifacts");
  CLI::App* validate = app.add_subcommand("validate", "Check a config without simulating");
  CLI::App* calibrate = app.add_subcommand("calibrate-atilde", "Estimate a~ for a delaunay config");
  add_common(run);
  add_common(validate);
  add_common(calibrate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidationFailed;
  }

  const RunOptions opt{seed, out, paths, quiet, threads};
  if (run->parsed()) return run_command(config, opt, std::cout, std::cerr);
  if (validate->parsed()) return validate_command(config, opt, std::cout, std::cerr);
  return calibrate_command(config, opt, std::cout, std::cerr);
}
