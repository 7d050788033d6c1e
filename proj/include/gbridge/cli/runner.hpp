#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "gbridge/cli/config.hpp"

namespace gbridge::cli {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> paths;
  bool quiet = false;
  std::optional<unsigned> threads;
};

/// Output directory: --out, then $BRIDGESIM_OUT, then the config's "output",
/// then "bridgesim_out".
std::string resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opt);

/// Runs the experiment and writes manifest.json, weights.csv, paths/*.csv and
/// summary.json under `out_dir`. Returns the summary.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                              std::ostream* log = nullptr);

/// a~ calibration for a delaunay config; writes calibration.json.
nlohmann::json calibrate_atilde(const ExperimentConfig& cfg, const std::string& out_dir);

// Command entry points returning the process exit code. Errors are printed
// to `err` as one JSON object.
int run_command(const std::string& config_path, const RunOptions& opt, std::ostream& out,
                std::ostream& err);
int validate_command(const std::string& config_path, const RunOptions& opt, std::ostream& out,
                     std::ostream& err);
int calibrate_command(const std::string& config_path, const RunOptions& opt, std::ostream& out,
                      std::ostream& err);

}  // namespace gbridge::cli
