#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gbridge/core/path.hpp"
#include "gbridge/core/rng.hpp"
#include "gbridge/sde/tables.hpp"

namespace gbridge::sde {

/// b(t, x) + a(t, x) grad log h~(t, x).
Vector guided_drift(const SdeSpec& spec, const BackwardTables& tables,
                    const LinearAuxiliarySpec& aux, double t, const Vector& x);

/// G(t, x) = (b - b~)' r~ - 1/2 tr[(a - a~)(L' M L - r~ r~')].
double log_psi_integrand_G(const SdeSpec& spec, const BackwardTables& tables,
                           const LinearAuxiliarySpec& aux, double t, const Vector& x);

/// V(t, x) = H(t, x) / log(1 / (T - t)) on T - t < min(T, 1/e); NaN outside.
double lyapunov_V(const BackwardTables& tables, const LinearAuxiliarySpec& aux, double t,
                  const Vector& x);

/// t_i = T (1 - (1 - i/N)^2), i = 0..N: steps shrink linearly toward T and
/// the last one is T / N^2.
std::vector<double> bridge_grid(double T, std::size_t N);

struct SimulationOptions {
  /// endpoint_hit is |L X_N - v| <= tol_end.
  double tol_end = 0.05;
};

/// Euler-Maruyama for the guided SDE on `grid` with standardized innovations
/// Z_i (dW_i = sqrt(dt_i) Z_i); log_psi is the left-point sum of G dt.
/// A non-finite state invalidates the path. Throws DimensionError if the
/// innovations do not match the grid.
WeightedPath simulate_guided_sde(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const std::vector<double>& grid,
                                 std::span<const Vector> innovations,
                                 const SimulationOptions& options = {});
WeightedPath simulate_guided_sde(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const std::vector<double>& grid,
                                 Rng& rng, const SimulationOptions& options = {});
WeightedPath simulate_guided_sde(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const std::vector<double>& grid,
                                 std::uint64_t seed, const SimulationOptions& options = {});

/// Standard normal innovations for `steps` steps of dimension `noise_dim`.
std::vector<Vector> draw_innovations(std::size_t steps, int noise_dim, Rng& rng);

}  // namespace gbridge::sde
