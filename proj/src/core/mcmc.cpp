#include "gbridge/core/mcmc.hpp"

#include <cmath>
#include <stdexcept>

#include "gbridge/core/error.hpp"

namespace gbridge {

namespace {

bool usable(const WeightedPath& p) { return p.valid && std::isfinite(p.log_weight()); }

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

}  // namespace

ChainResult mh_independence_chain(const PathSampler& sampler, std::size_t n_iter,
                                  std::uint64_t seed) {
  if (n_iter < 1) throw std::invalid_argument("mh_independence_chain: n_iter must be >= 1");
  Rng proposals(seed, 0);
  Rng uniforms(seed, 1);

  WeightedPath current = sampler(proposals);
  for (int attempt = 1; !usable(current); ++attempt) {
    if (attempt >= 1000)
      throw std::runtime_error("mh_independence_chain: no valid initial path in 1000 draws");
    current = sampler(proposals);
  }

  ChainResult out;
  out.chain.reserve(n_iter);
  for (std::size_t it = 0; it < n_iter; ++it) {
    WeightedPath proposal = sampler(proposals);
    if (!usable(proposal)) {
      ++out.invalid_proposals;
    } else if (accept(proposal.log_weight() - current.log_weight(), uniforms)) {
      current = std::move(proposal);
      ++out.accepted;
    }
    out.chain.push_back(current);
  }
  out.acceptance_rate = static_cast<double>(out.accepted) / static_cast<double>(n_iter);
  return out;
}

std::vector<Eigen::VectorXd> pcn_step(std::span<const Eigen::VectorXd> innovations,
                                      std::size_t expected_steps, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("pcn_step: rho must lie in [0, 1)");
  if (innovations.size() != expected_steps)
    throw DimensionError("pcn_step: innovation count " + std::to_string(innovations.size()) +
                         " does not match grid steps " + std::to_string(expected_steps));
  const double tau = std::sqrt(1.0 - rho * rho);
  std::vector<Eigen::VectorXd> out;
  out.reserve(innovations.size());
  for (const auto& z : innovations) {
    Eigen::VectorXd next(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) next[k] = rho * z[k] + tau * rng.normal();
    out.push_back(std::move(next));
  }
  return out;
}

ChainResult pcn_chain(const InnovationSimulator& simulate,
                      std::vector<Eigen::VectorXd> initial_innovations, std::size_t n_iter,
                      double rho, std::uint64_t seed) {
  if (n_iter < 1) throw std::invalid_argument("pcn_chain: n_iter must be >= 1");
  Rng noise(seed, 0);
  Rng uniforms(seed, 1);
  const std::size_t steps = initial_innovations.size();

  std::vector<Eigen::VectorXd> z = std::move(initial_innovations);
  WeightedPath current = simulate(z);
  for (int attempt = 1; !usable(current); ++attempt) {
    if (attempt >= 1000) throw std::runtime_error("pcn_chain: no valid initial path");
    z = pcn_step(z, steps, 0.0, noise);
    current = simulate(z);
  }

  ChainResult out;
  out.chain.reserve(n_iter);
  for (std::size_t it = 0; it < n_iter; ++it) {
    std::vector<Eigen::VectorXd> z_new = pcn_step(z, steps, rho, noise);
    WeightedPath proposal = simulate(z_new);
    if (!usable(proposal)) {
      ++out.invalid_proposals;
    } else if (accept(proposal.log_weight() - current.log_weight(), uniforms)) {
      current = std::move(proposal);
      z = std::move(z_new);
      ++out.accepted;
    }
    out.chain.push_back(current);
  }
  out.acceptance_rate = static_cast<double>(out.accepted) / static_cast<double>(n_iter);
  return out;
}

}  // namespace gbridge
