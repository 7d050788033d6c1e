#include "gbridge/delaunay/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

#include "gbridge/core/diagnostics.hpp"
#include "gbridge/core/error.hpp"
#include "gbridge/kernels/kernels.hpp"

namespace gbridge::delaunay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// c_y = |x_T - y|^2 - |x_T - x|^2 for the neighbors of x.
void improvement_offsets(const DelaunayBridgeSpec& spec, int x, std::vector<double>& c) {
  const auto& nb = spec.graph().neighbors(x);
  c.resize(nb.size());
  const double dx = spec.target_sq_distance(x);
  for (std::size_t k = 0; k < nb.size(); ++k) c[k] = spec.target_sq_distance(nb[k]) - dx;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -kInf;
  for (double a : v) m = std::max(m, a);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double a : v) s += std::exp(a - m);
  return m + std::log(s);
}

double ratio_sum(const DelaunayBridgeSpec& spec, double s, const std::vector<double>& c) {
  const double u = spec.T() - s;
  return kernels::exp_sum(c, -1.0 / (2.0 * spec.a_tilde() * u));
}

}  // namespace

DelaunayBridgeSpec::DelaunayBridgeSpec(std::shared_ptr<const DelaunayGraph> graph, int x0_index,
                                       int xT_index, double T, double a_tilde)
    : graph_(std::move(graph)), x0_(x0_index), xT_(xT_index), T_(T), a_tilde_(a_tilde) {
  if (!graph_) throw DomainError("DelaunayBridgeSpec: null graph");
  const int n = static_cast<int>(graph_->vertex_count());
  if (x0_ < 0 || x0_ >= n || xT_ < 0 || xT_ >= n)
    throw DomainError("DelaunayBridgeSpec: vertex index out of range");
  if (x0_ == xT_) throw DomainError("DelaunayBridgeSpec: x0 must differ from xT");
  if (!(T_ > 0.0) || !std::isfinite(T_)) throw DomainError("DelaunayBridgeSpec: T must be positive");
  if (!(a_tilde_ > 0.0) || !std::isfinite(a_tilde_))
    throw DomainError("DelaunayBridgeSpec: a_tilde must be positive");
  sq_dist_.resize(graph_->vertex_count());
  const Point& target = graph_->point(xT_);
  for (int i = 0; i < n; ++i) sq_dist_[i] = squared_distance(graph_->point(i), target);
}

double jump_log_ratio(const DelaunayBridgeSpec& spec, double t, int x, int y) {
  if (!(t < spec.T())) throw DomainError("jump_log_ratio: t must be before T");
  if (!spec.graph().adjacent(x, y))
    throw DomainError("jump_log_ratio: vertices " + std::to_string(x) + " and " +
                      std::to_string(y) + " are not neighbors");
  const double c = spec.target_sq_distance(y) - spec.target_sq_distance(x);
  return -c / (2.0 * spec.a_tilde() * (spec.T() - t));
}

double log_psi_integrand(const DelaunayBridgeSpec& spec, double s, int x) {
  thread_local std::vector<double> c;
  improvement_offsets(spec, x, c);
  const double u = spec.T() - s;
  const double deg = static_cast<double>(c.size());
  const double d = spec.target_sq_distance(x);
  const double quad = d == 0.0 ? 0.0 : d / (2.0 * spec.a_tilde() * u * u);
  return ratio_sum(spec, s, c) - deg - quad;
}

double lyapunov_V(const DelaunayBridgeSpec& spec, double t, int x) {
  thread_local std::vector<double> c;
  improvement_offsets(spec, x, c);
  return ratio_sum(spec, t, c);
}

JumpIntegrand delaunay_integrand(const DelaunayBridgeSpec& spec) {
  return [&spec](double s, std::int64_t x) {
    return log_psi_integrand(spec, s, static_cast<int>(x));
  };
}

KappaWeight log_psi_kappa_delaunay(const DelaunayBridgeSpec& spec,
                                   const PiecewiseConstantPath& path, double abs_tol) {
  if (path.terminal_state() != spec.xT())
    throw DivergenceError("log_psi_kappa_delaunay: path ends at vertex " +
                          std::to_string(path.terminal_state()) + ", not at x_T");
  const double T = spec.T();
  const double a = spec.a_tilde();
  std::vector<double> c;
  double total = 0.0;
  for (std::size_t k = 0; k < path.interval_count(); ++k) {
    const double s1 = path.interval_start(k);
    const double s2 = path.interval_end(k);
    if (!(s2 > s1)) continue;
    const int x = static_cast<int>(path.states()[k]);
    improvement_offsets(spec, x, c);
    const double deg = static_cast<double>(c.size());
    const double d = spec.target_sq_distance(x);
    if (d != 0.0) {
      if (!(s2 < T)) throw DivergenceError("log_psi_kappa_delaunay: off-target state at T");
      total -= d / (2.0 * a) * (1.0 / (T - s2) - 1.0 / (T - s1));
    }
    total += adaptive_simpson([&](double s) { return ratio_sum(spec, s, c) - deg; }, s1, s2,
                              abs_tol);
  }
  return {total, std::log(2.0 * std::numbers::pi * a * T)};
}

// ---------------------------------------------------------------------------
// Simulation

WeightedPath simulate_guided_jump(const DelaunayBridgeSpec& spec, Rng& rng,
                                  const GuidedOptions& options) {
  const DelaunayGraph& g = spec.graph();
  const double T = spec.T();
  const double two_a = 2.0 * spec.a_tilde();
  PiecewiseConstantPath path(T, spec.x0());
  std::vector<double> c, bound, rate;
  int x = spec.x0();
  double t = 0.0;
  double cmin = 0.0;
  bool exhausted = false;

  auto load = [&](int v) {
    improvement_offsets(spec, v, c);
    cmin = c.empty() ? 0.0 : *std::min_element(c.begin(), c.end());
    bound.resize(c.size());
    rate.resize(c.size());
  };
  auto jump_to = [&](double s, int y) {
    if (!(s > t)) s = std::nextafter(t, T);
    path.push_jump(s, y);
    t = s;
    x = y;
    load(y);
  };
  load(x);

  if (options.frozen) {
    while (true) {
      const double deg = static_cast<double>(c.size());
      const double s = t + rng.exponential() / deg;
      if (!(s < T)) break;
      jump_to(s, g.neighbors(x)[rng.below(c.size())]);
    }
  } else {
    while (t < T) {
      const double u = T - t;
      double t_end = T;
      if (cmin < 0.0) {
        // Keep every increasing log-rate within +1 of its value at t.
        const double delta = std::min(u / 8.0, u - 1.0 / (1.0 / u + two_a / -cmin));
        t_end = t + delta;
        if (!(t_end > t)) {
          exhausted = true;
          break;
        }
      }
      const double u_end = T - t_end;
      for (std::size_t k = 0; k < c.size(); ++k)
        bound[k] = c[k] < 0.0 ? -c[k] / (two_a * u_end) : -c[k] / (two_a * u);
      const double log_bound = log_sum_exp(bound);
      const double s = t + rng.exponential() * std::exp(-log_bound);
      if (!(s < t_end)) {
        t = t_end;
        continue;
      }
      const double us = T - s;
      for (std::size_t k = 0; k < c.size(); ++k) rate[k] = -c[k] / (two_a * us);
      const double log_total = log_sum_exp(rate);
      if (log_total > log_bound + 1e-9 * std::max(1.0, std::abs(log_bound)))
        throw ContractViolation("simulate_guided_jump: thinning bound violated");
      if (std::log(rng.uniform()) >= log_total - log_bound) {
        t = std::max(s, t);
        continue;
      }
      const double target = rng.uniform();
      double acc = 0.0;
      std::size_t pick = c.size() - 1;
      for (std::size_t k = 0; k < c.size(); ++k) {
        acc += std::exp(rate[k] - log_total);
        if (target < acc) {
          pick = k;
          break;
        }
      }
      jump_to(s, g.neighbors(x)[pick]);
    }
  }

  WeightedPath wp(path);
  wp.endpoint_hit = path.terminal_state() == spec.xT();
  if (options.frozen) return wp;
  wp.sup_V = sup_V_diagnostic(path, [&spec](double s, std::int64_t v) {
    return lyapunov_V(spec, s, static_cast<int>(v));
  });
  if (exhausted) {
    wp.log_psi = std::numeric_limits<double>::quiet_NaN();
    wp.invalidate("time resolution exhausted before T");
    return wp;
  }
  if (!wp.endpoint_hit) {
    wp.log_psi = std::numeric_limits<double>::quiet_NaN();
    wp.invalidate("path does not end at x_T");
    return wp;
  }
  try {
    const KappaWeight w = log_psi_kappa_delaunay(spec, path);
    wp.log_psi = w.log_psi;
    wp.log_constant = w.log_constant;
  } catch (const std::domain_error& e) {
    wp.log_psi = std::numeric_limits<double>::quiet_NaN();
    wp.invalidate(e.what());
  }
  return wp;
}

WeightedPath simulate_guided_jump(const DelaunayBridgeSpec& spec, std::uint64_t seed,
                                  const GuidedOptions& options) {
  Rng rng(seed);
  WeightedPath wp = simulate_guided_jump(spec, rng, options);
  wp.seed = seed;
  return wp;
}

// ---------------------------------------------------------------------------
// Oracle

Eigen::MatrixXd graph_generator(const DelaunayGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.vertex_count());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nb = graph.neighbors(static_cast<int>(i));
    for (int j : nb) Q(i, j) = 1.0;
    Q(i, i) = -static_cast<double>(nb.size());
  }
  return Q;
}

namespace {

constexpr std::size_t kOracleCap = 500;

void check_oracle_size(const DelaunayGraph& graph) {
  if (graph.vertex_count() > kOracleCap)
    throw SizeError("dense graph oracle supports at most 500 vertices, got " +
                    std::to_string(graph.vertex_count()));
}

}  // namespace

OracleTable exact_h_small_graph(const DelaunayGraph& graph, double T, int xT_index,
                                const std::vector<double>& t_grid) {
  check_oracle_size(graph);
  if (xT_index < 0 || xT_index >= static_cast<int>(graph.vertex_count()))
    throw DomainError("exact_h_small_graph: xT out of range");
  const Eigen::MatrixXd Q = graph_generator(graph);
  OracleTable table;
  table.grid = t_grid;
  table.offset = 0;
  table.h_values.resize(static_cast<Eigen::Index>(t_grid.size()), Q.rows());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double dt = T - t_grid[i];
    if (dt < 0.0) throw DomainError("exact_h_small_graph: grid time beyond T");
    const Eigen::MatrixXd P = (dt * Q).exp();
    table.h_values.row(static_cast<Eigen::Index>(i)) = P.col(xT_index).transpose();
  }
  return table;
}

Eigen::VectorXd bridge_marginal(const DelaunayBridgeSpec& spec, double t) {
  check_oracle_size(spec.graph());
  if (!(t >= 0.0 && t <= spec.T())) throw DomainError("bridge_marginal: t outside [0, T]");
  const Eigen::MatrixXd Q = graph_generator(spec.graph());
  const Eigen::MatrixXd P0t = (t * Q).exp();
  const Eigen::MatrixXd PtT = ((spec.T() - t) * Q).exp();
  const Eigen::MatrixXd P0T = (spec.T() * Q).exp();
  const double h0 = P0T(spec.x0(), spec.xT());
  Eigen::VectorXd out(Q.rows());
  for (Eigen::Index x = 0; x < Q.rows(); ++x)
    out(x) = P0t(spec.x0(), x) * PtT(x, spec.xT()) / h0;
  return out;
}

// ---------------------------------------------------------------------------
// Geometry checks

std::vector<int> greedy_neighbor_violations(const DelaunayGraph& graph, int xT_index) {
  const Point& target = graph.point(xT_index);
  std::vector<int> out;
  for (int x = 0; x < static_cast<int>(graph.vertex_count()); ++x) {
    if (x == xT_index) continue;
    const double dx = squared_distance(graph.point(x), target);
    bool found = false;
    for (int y : graph.neighbors(x))
      if (squared_distance(graph.point(y), target) < dx) {
        found = true;
        break;
      }
    if (!found) out.push_back(x);
  }
  return out;
}

std::vector<bool> greedy_neighbor_exists(const DelaunayGraph& graph, int xT_index) {
  std::vector<bool> ok(graph.vertex_count(), true);
  for (int v : greedy_neighbor_violations(graph, xT_index)) ok[v] = false;
  return ok;
}

std::vector<bool> boundary_vertices(const DelaunayGraph& graph) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : graph.triangles())
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  std::vector<bool> hull(graph.vertex_count(), false);
  for (const auto& [e, n] : uses)
    if (n == 1) hull[e.first] = hull[e.second] = true;
  return hull;
}

// ---------------------------------------------------------------------------
// Calibration

double quadratic_variation_scale(const std::vector<Point>& increments, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("quadratic_variation_scale: horizon must be positive");
  double qv = 0.0;
  for (const auto& d : increments) qv += d.x * d.x + d.y * d.y;
  return qv / (2.0 * horizon);
}

AtildeEstimate estimate_atilde(const PeriodicGraph& graph, double horizon, std::uint64_t seed) {
  if (!(horizon > 0.0)) throw DomainError("estimate_atilde: horizon must be positive");
  if (graph.points.empty()) throw InsufficientDataError("estimate_atilde: empty graph");
  Rng rng(seed);
  auto x = static_cast<std::size_t>(rng.below(graph.points.size()));
  double t = 0.0;
  double qv = 0.0;
  std::uint64_t jumps = 0;
  while (true) {
    const auto& nb = graph.neighbors[x];
    if (nb.empty()) break;
    t += rng.exponential() / static_cast<double>(nb.size());
    if (t > horizon) break;
    const auto& step = nb[rng.below(nb.size())];
    qv += step.dx * step.dx + step.dy * step.dy;
    x = static_cast<std::size_t>(step.index);
    ++jumps;
  }
  if (jumps < 100)
    throw InsufficientDataError("estimate_atilde: only " + std::to_string(jumps) +
                                " jumps; increase the horizon");
  return {qv / (2.0 * horizon), jumps, horizon};
}

AtildeEstimate estimate_atilde(const DelaunayGraph& graph, double horizon, std::uint64_t seed) {
  return estimate_atilde(build_periodic_delaunay(graph.points(), graph.window()), horizon, seed);
}

}  // namespace gbridge::delaunay
