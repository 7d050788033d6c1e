#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gbridge/core/path.hpp"
#include "gbridge/core/rng.hpp"

namespace gbridge {

/// Draws one guided path using the supplied generator.
using PathSampler = std::function<WeightedPath(Rng&)>;

struct ChainResult {
  std::vector<WeightedPath> chain;
  double acceptance_rate = 0.0;
  std::size_t accepted = 0;
  std::size_t invalid_proposals = 0;
};

/// Independence Metropolis-Hastings on path space targeting the conditioned
/// law: a fresh guided proposal replaces the current path with probability
/// min(1, exp(log_weight' - log_weight)). The initial state is the first
/// valid draw (up to 1000 attempts); the returned chain holds the n_iter
/// states after each step. Invalid proposals are rejected and counted.
ChainResult mh_independence_chain(const PathSampler& sampler, std::size_t n_iter,
                                  std::uint64_t seed);

/// Preconditioned Crank-Nicolson move rho Z + sqrt(1 - rho^2) xi on
/// standardized innovations. `expected_steps` is the simulation grid's step
/// count; a mismatch throws DimensionError.
std::vector<Eigen::VectorXd> pcn_step(std::span<const Eigen::VectorXd> innovations,
                                      std::size_t expected_steps, double rho, Rng& rng);

/// Rebuilds a guided path from a fixed innovation sequence.
using InnovationSimulator = std::function<WeightedPath(std::span<const Eigen::VectorXd>)>;

/// pCN Metropolis-Hastings on the driving noise of an SDE backend. The
/// proposal is reversible for the standard Gaussian reference, so the
/// acceptance probability is min(1, exp(log_weight' - log_weight)).
ChainResult pcn_chain(const InnovationSimulator& simulate,
                      std::vector<Eigen::VectorXd> initial_innovations, std::size_t n_iter,
                      double rho, std::uint64_t seed);

}  // namespace gbridge
