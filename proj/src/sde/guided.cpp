#include "gbridge/sde/guided.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "gbridge/core/error.hpp"

namespace gbridge::sde {

namespace {

double G_from(const LinearAuxiliarySpec& aux, double t, const Vector& x,
              const HtildeQuantities& q, const Vector& b, const Matrix& a) {
  const Vector db = b - aux.b_tilde(t, x);
  const Matrix da = a - aux.a_tilde(t);
  const Matrix K = q.LtML - q.r_tilde * q.r_tilde.transpose();
  return db.dot(q.r_tilde) - 0.5 * (da.cwiseProduct(K.transpose())).sum();
}

}  // namespace

Vector guided_drift(const SdeSpec& spec, const BackwardTables& tables,
                    const LinearAuxiliarySpec& aux, double t, const Vector& x) {
  const HtildeQuantities q = htilde_quantities(tables, aux, t, x);
  return spec.b(t, x) + spec.a(t, x) * q.r_tilde;
}

double log_psi_integrand_G(const SdeSpec& spec, const BackwardTables& tables,
                           const LinearAuxiliarySpec& aux, double t, const Vector& x) {
  const HtildeQuantities q = htilde_quantities(tables, aux, t, x);
  return G_from(aux, t, x, q, spec.b(t, x), spec.a(t, x));
}

double lyapunov_V(const BackwardTables& tables, const LinearAuxiliarySpec& aux, double t,
                  const Vector& x) {
  const double T = tables.T();
  const double u = T - t;
  if (!(u > 0.0) || !(u < std::min(T, std::exp(-1.0))))
    return std::numeric_limits<double>::quiet_NaN();
  return htilde_quantities(tables, aux, t, x).H / std::log(1.0 / u);
}

std::vector<double> bridge_grid(double T, std::size_t N) {
  if (N == 0) throw DomainError("bridge_grid: need at least one step");
  if (!(T > 0.0)) throw DomainError("bridge_grid: T must be positive");
  std::vector<double> g(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    const double r = 1.0 - static_cast<double>(i) / static_cast<double>(N);
    g[i] = T * (1.0 - r * r);
  }
  g.back() = T;
  return g;
}

std::vector<Vector> draw_innovations(std::size_t steps, int noise_dim, Rng& rng) {
  std::vector<Vector> z(steps, Vector(noise_dim));
  for (auto& v : z)
    for (int k = 0; k < noise_dim; ++k) v(k) = rng.normal();
  return z;
}

WeightedPath simulate_guided_sde(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const std::vector<double>& grid,
                                 std::span<const Vector> innovations,
                                 const SimulationOptions& options) {
  if (grid.size() < 2) throw DimensionError("simulate_guided_sde: grid too short");
  const std::size_t N = grid.size() - 1;
  if (innovations.size() != N)
    throw DimensionError("simulate_guided_sde: " + std::to_string(innovations.size()) +
                         " innovations for " + std::to_string(N) + " steps");
  if (spec.x0.size() != spec.dim) throw DimensionError("simulate_guided_sde: x0 has wrong length");

  std::vector<Vector> xs;
  xs.reserve(N + 1);
  xs.push_back(spec.x0);
  double log_psi = 0.0;
  double sup_v = -std::numeric_limits<double>::infinity();
  std::string failure;

  for (std::size_t i = 0; i < N; ++i) {
    const double t = grid[i];
    const double dt = grid[i + 1] - t;
    const Vector& x = xs.back();
    if (innovations[i].size() != spec.noise_dim)
      throw DimensionError("simulate_guided_sde: innovation has wrong dimension");
    const HtildeQuantities q = htilde_quantities(tables, aux, t, x);
    const Vector b = spec.b(t, x);
    const Matrix sig = spec.sigma(t, x);
    const Matrix a = sig * sig.transpose();
    log_psi += G_from(aux, t, x, q, b, a) * dt;

    const double u = tables.T() - t;
    if (u > 0.0 && u < std::min(tables.T(), std::exp(-1.0))) {
      const double v = q.H / std::log(1.0 / u);
      if (!std::isnan(v)) sup_v = std::max(sup_v, v);
    }

    Vector next = x + (b + a * q.r_tilde) * dt + sig * (std::sqrt(dt) * innovations[i]);
    if (!next.allFinite() || !std::isfinite(log_psi)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "non-finite state at t = %.17g (|x| = %.17g)", t, x.norm());
      failure = buf;
      xs.push_back(std::move(next));
      // Pad the remaining nodes so the path stays well-formed.
      while (xs.size() < N + 1) xs.push_back(xs.back());
      break;
    }
    xs.push_back(std::move(next));
  }

  std::vector<Vector> z(innovations.begin(), innovations.end());
  WeightedPath wp(GridPath(grid, std::move(xs), std::move(z)));
  const auto& gp = std::get<GridPath>(wp.path);
  wp.log_psi = log_psi;
  wp.sup_V = sup_v == -std::numeric_limits<double>::infinity() ? 0.0 : sup_v;
  const Vector miss = aux.L * gp.terminal_value() - aux.v;
  wp.endpoint_hit = miss.allFinite() && miss.norm() <= options.tol_end;
  if (!failure.empty()) {
    wp.log_psi = std::numeric_limits<double>::quiet_NaN();
    wp.sup_V = std::numeric_limits<double>::infinity();
    wp.endpoint_hit = false;
    wp.invalidate(failure);
  }
  return wp;
}

WeightedPath simulate_guided_sde(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const std::vector<double>& grid,
                                 Rng& rng, const SimulationOptions& options) {
  const auto z = draw_innovations(grid.size() - 1, spec.noise_dim, rng);
  return simulate_guided_sde(spec, tables, aux, grid, z, options);
}

WeightedPath simulate_guided_sde(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const std::vector<double>& grid,
                                 std::uint64_t seed, const SimulationOptions& options) {
  Rng rng(seed);
  WeightedPath wp = simulate_guided_sde(spec, tables, aux, grid, rng, options);
  wp.seed = seed;
  return wp;
}

}  // namespace gbridge::sde
