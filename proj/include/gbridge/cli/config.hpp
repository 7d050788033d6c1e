#pragma once

// Experiment configuration: one JSON document with a backend, a model block,
// a sampler block and a mandatory seed.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbridge/delaunay/bridge.hpp"
#include "gbridge/landmarks/landmarks.hpp"
#include "gbridge/poisson/poisson.hpp"
#include "gbridge/sde/guided.hpp"
#include "gbridge/sde/models.hpp"

namespace gbridge::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeFailure = 1,
  kValidationFailed = 2,
  kUnknownBackend = 3,
  kMalformedConfig = 4,
  kUnwritableOutput = 5,
};

/// Machine-readable failure carrying its exit code.
class CliError : public std::runtime_error {
 public:
  CliError(int code, std::string kind, const std::string& message)
      : std::runtime_error(message), code_(code), kind_(std::move(kind)) {}
  int code() const noexcept { return code_; }
  const std::string& kind() const noexcept { return kind_; }
  nlohmann::json to_json() const;

 private:
  int code_;
  std::string kind_;
};

enum class BackendKind { Poisson, Delaunay, Sde, Landmarks };
enum class SamplerKind { Importance, MhIndependence, Pcn };

std::string to_string(BackendKind b);
std::string to_string(SamplerKind s);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Importance;
  std::size_t n_paths = 1000;
  std::size_t n_iter = 1000;
  double rho = 0.9;
};

struct ExperimentConfig {
  BackendKind backend = BackendKind::Poisson;
  nlohmann::json model;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
  std::string output;
  /// Grid policy for diffusion backends: N steps of bridge_grid.
  std::size_t grid_steps = 1000;
  /// Time at which marginals and means are estimated; defaults to T/2.
  std::optional<double> estimate_time;
  /// Number of individual path CSVs written.
  std::size_t paths_to_write = 10;
  /// Worker threads; results do not depend on it.
  unsigned threads = 0;
  /// Vertex cap for the dense graph oracle in summaries.
  std::size_t oracle_max_vertices = 200;
  nlohmann::json raw;
};

struct ValidationIssue {
  int code = kValidationFailed;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return errors.empty(); }
  int exit_code() const noexcept { return errors.empty() ? kOk : errors.front().code; }
  nlohmann::json to_json() const;
};

/// Reads and parses a JSON file; throws CliError (malformed config) on failure.
nlohmann::json load_config_file(const std::string& path);

/// Structural and semantic checks without running any simulation. A seed
/// supplied on the command line satisfies the seed requirement.
ValidationReport validate_config(const nlohmann::json& j,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);

/// Validates then decodes; throws CliError with the first issue's code.
ExperimentConfig parse_config(const nlohmann::json& j,
                              std::optional<std::uint64_t> seed_override = std::nullopt);

// Model builders shared by validate and run.
poisson::InhomPoissonSpec build_poisson(const nlohmann::json& model);
/// `seed` drives the point process when the model block has no point_seed.
delaunay::DelaunayBridgeSpec build_delaunay(const nlohmann::json& model, std::uint64_t seed);
std::shared_ptr<const delaunay::DelaunayGraph> build_delaunay_graph(const nlohmann::json& model,
                                                                    std::uint64_t seed);
sde::SdeModel build_sde(const nlohmann::json& model);
struct LandmarkSetup {
  landmarks::KernelSpec kernel;
  landmarks::NoiseFieldSpec noise;
  landmarks::LandmarkState initial;
  Eigen::MatrixXd qT;
  Eigen::MatrixXd pT;
  double T = 1.0;
};
LandmarkSetup parse_landmarks(const nlohmann::json& model);
sde::SdeModel build_landmarks(const LandmarkSetup& setup);

}  // namespace gbridge::cli
