#pragma once

// Bridges of the unit-rate nearest-neighbor walk on a Delaunay graph,
// conditioned on X_T = x_T, guided by a Brownian motion with scale a~:
// h~(t, x) = exp(-|x_T - x|^2 / (2 a~ (T - t))) / (2 pi a~ (T - t)).

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "gbridge/core/oracle.hpp"
#include "gbridge/core/path.hpp"
#include "gbridge/core/rng.hpp"
#include "gbridge/core/weights.hpp"
#include "gbridge/delaunay/geometry.hpp"

namespace gbridge::delaunay {

class DelaunayBridgeSpec {
 public:
  DelaunayBridgeSpec(std::shared_ptr<const DelaunayGraph> graph, int x0_index, int xT_index,
                     double T, double a_tilde);

  const DelaunayGraph& graph() const noexcept { return *graph_; }
  std::shared_ptr<const DelaunayGraph> graph_ptr() const noexcept { return graph_; }
  int x0() const noexcept { return x0_; }
  int xT() const noexcept { return xT_; }
  double T() const noexcept { return T_; }
  double a_tilde() const noexcept { return a_tilde_; }
  const Point& target() const { return graph_->point(xT_); }
  /// |x_T - x|^2 for vertex x.
  double target_sq_distance(int x) const { return sq_dist_[static_cast<std::size_t>(x)]; }

 private:
  std::shared_ptr<const DelaunayGraph> graph_;
  int x0_;
  int xT_;
  double T_;
  double a_tilde_;
  std::vector<double> sq_dist_;
};

/// log h~(t, y) / h~(t, x) = -(|x_T - y|^2 - |x_T - x|^2) / (2 a~ (T - t)).
/// Throws DomainError if y is not a neighbor of x or t >= T.
double jump_log_ratio(const DelaunayBridgeSpec& spec, double t, int x, int y);

/// sum_{y ~ x} (h~(s, y) / h~(s, x) - 1) - |x_T - x|^2 / (2 a~ (T - s)^2).
double log_psi_integrand(const DelaunayBridgeSpec& spec, double s, int x);

/// V(t, x) = sum_{y ~ x} h~(t, y) / h~(t, x).
double lyapunov_V(const DelaunayBridgeSpec& spec, double t, int x);

struct KappaWeight {
  double log_psi = 0.0;
  /// log(2 pi a~ T).
  double log_constant = 0.0;
};

/// Log weight of a path ending at x_T: the integrand above integrated per
/// constancy interval (quadratic term exactly, neighbor sum by adaptive
/// Simpson). Throws DivergenceError if the path does not end at x_T and
/// std::domain_error if the integrand is non-finite before the hit time.
KappaWeight log_psi_kappa_delaunay(const DelaunayBridgeSpec& spec,
                                   const PiecewiseConstantPath& path, double abs_tol = 1e-10);

/// Integrand as a generic jump integrand, for dense-quadrature cross-checks.
JumpIntegrand delaunay_integrand(const DelaunayBridgeSpec& spec);

struct GuidedOptions {
  /// Force every log-ratio to 0: simulates the unconditioned unit-rate walk.
  bool frozen = false;
};

/// Guided walk by thinning on adaptive subintervals with per-edge monotone
/// rate bounds. The path is over vertex indices; log_psi and log_constant
/// hold the weight of a path that hits x_T, otherwise the path is invalid.
WeightedPath simulate_guided_jump(const DelaunayBridgeSpec& spec, Rng& rng,
                                  const GuidedOptions& options = {});
WeightedPath simulate_guided_jump(const DelaunayBridgeSpec& spec, std::uint64_t seed,
                                  const GuidedOptions& options = {});

/// Graph generator: off-diagonal 1 between neighbors, diagonal -degree.
Eigen::MatrixXd graph_generator(const DelaunayGraph& graph);

/// h(t, x) = [exp((T - t) Q)]_{x, xT} on `t_grid`. Throws SizeError above 500 vertices.
OracleTable exact_h_small_graph(const DelaunayGraph& graph, double T, int xT_index,
                                const std::vector<double>& t_grid);

/// P*(X_t = x) for all x: p(0, x0; t, x) h(t, x) / h(0, x0).
Eigen::VectorXd bridge_marginal(const DelaunayBridgeSpec& spec, double t);

/// Vertices x != x_T without a neighbor strictly closer to x_T.
std::vector<int> greedy_neighbor_violations(const DelaunayGraph& graph, int xT_index);

/// Per-vertex report; entry x_T is true by convention.
std::vector<bool> greedy_neighbor_exists(const DelaunayGraph& graph, int xT_index);

/// Vertices whose Voronoi-relevant neighborhood may be clipped by the window:
/// those sharing a triangle with the convex hull.
std::vector<bool> boundary_vertices(const DelaunayGraph& graph);

struct AtildeEstimate {
  double a_tilde = 0.0;
  std::uint64_t jumps = 0;
  double horizon = 0.0;
};

/// sum |Delta|^2 / (2 horizon) from an increment list.
double quadratic_variation_scale(const std::vector<Point>& increments, double horizon);

/// Unconditioned unit-rate walk on the torus graph for `horizon` time units
/// from a uniformly chosen start; a~ from its quadratic variation.
/// Throws InsufficientDataError below 100 jumps.
AtildeEstimate estimate_atilde(const PeriodicGraph& graph, double horizon, std::uint64_t seed);
/// Builds the torus graph from the points and window of `graph` first.
AtildeEstimate estimate_atilde(const DelaunayGraph& graph, double horizon, std::uint64_t seed);

}  // namespace gbridge::delaunay
