#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gbridge/core/error.hpp"
#include "gbridge/core/estimate.hpp"
#include "gbridge/core/replicate.hpp"
#include "gbridge/core/weights.hpp"
#include "gbridge/delaunay/bridge.hpp"
#include "gbridge/delaunay/geometry.hpp"

using namespace gbridge;
using namespace gbridge::delaunay;

namespace {

using Tri = std::array<int, 3>;

Tri sorted(Tri t) {
  std::sort(t.begin(), t.end());
  return t;
}

// Circumcircle test in long double, only used where points are in general position.
bool strictly_inside(const Point& a, const Point& b, const Point& c, const Point& d) {
  using L = long double;
  const L adx = a.x - d.x, ady = a.y - d.y;
  const L bdx = b.x - d.x, bdy = b.y - d.y;
  const L cdx = c.x - d.x, cdy = c.y - d.y;
  const L det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) -
                (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  const L orient = (b.x - a.x) * (L)(c.y - a.y) - (b.y - a.y) * (L)(c.x - a.x);
  return orient > 0 ? det > 1e-18L : det < -1e-18L;
}

// O(n^4) Delaunay: every triple with an empty circumcircle.
std::set<Tri> brute_force_triangles(const std::vector<Point>& p) {
  std::set<Tri> out;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        if (orient2d(p[i], p[j], p[k]) == 0) continue;
        bool empty = true;
        for (int m = 0; m < n && empty; ++m)
          if (m != i && m != j && m != k && strictly_inside(p[i], p[j], p[k], p[m])) empty = false;
        if (empty) out.insert({i, j, k});
      }
  return out;
}

std::shared_ptr<const DelaunayGraph> small_graph(std::uint64_t seed, double intensity = 20.0) {
  return std::make_shared<const DelaunayGraph>(
      build_delaunay(sample_poisson_points(intensity, Window{}, seed), Window{}));
}

// Midpoint rule on a fixed grid graded toward T, cells split at jump times.
double graded_quadrature(const DelaunayBridgeSpec& spec, const PiecewiseConstantPath& p,
                         std::size_t n) {
  const double T = spec.T();
  std::vector<double> nodes;
  for (std::size_t i = 0; i <= n; ++i) {
    const double r = 1.0 - static_cast<double>(i) / static_cast<double>(n);
    nodes.push_back(T * (1.0 - r * r * r * r));
  }
  for (double s : p.jump_times()) nodes.push_back(s);
  std::sort(nodes.begin(), nodes.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i], b = nodes[i + 1];
    if (!(b > a)) continue;
    const double m = 0.5 * (a + b);
    if (!(m < T)) continue;
    acc += log_psi_integrand(spec, m, static_cast<int>(p.state_at(m))) * (b - a);
  }
  return acc;
}

}  // namespace

TEST_CASE("exact predicates") {
  CHECK(orient2d({0, 0}, {1, 0}, {0, 1}) == 1);
  CHECK(orient2d({0, 0}, {0, 1}, {1, 0}) == -1);
  CHECK(orient2d({0, 0}, {1, 1}, {2, 2}) == 0);
  // Near-degenerate: a tiny perturbation the double filter cannot resolve naively.
  CHECK(orient2d({0.5, 0.5}, {12.0, 12.0}, {24.0, 24.0}) == 0);
  CHECK(orient2d({0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3 + 1e-17}) == orient2d({0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}));
  CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {1, 1}) == 0);
  CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {0.5, 0.5}) == 1);
  CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {2, 2}) == -1);
}

TEST_CASE("sample_poisson_points") {
  int empty = 0;
  for (std::uint64_t s = 0; s < 1000; ++s)
    empty += sample_poisson_points(0.01, Window{}, s).empty() ? 1 : 0;
  CHECK(empty >= 900);

  double total = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto pts = sample_poisson_points(5000.0, Window{}, static_cast<std::uint64_t>(s));
    total += static_cast<double>(pts.size());
    for (const auto& p : pts) REQUIRE(Window{}.contains(p));
  }
  CHECK(std::abs(total / seeds - 5000.0) < 3.0 * std::sqrt(5000.0 / seeds));
  CHECK(sample_poisson_points(100, Window{0, 2, -1, 1}, 9) == sample_poisson_points(100, Window{0, 2, -1, 1}, 9));
}

TEST_CASE("build_delaunay small cases") {
  auto g = build_delaunay({{0, 0}, {1, 0}, {0.3, 0.8}});
  CHECK(g.triangles().size() == 1);
  for (int i = 0; i < 3; ++i) CHECK(g.degree(i) == 2);

  // Cocircular square: documented diagonal (0,1)-(1,0), in any input order.
  std::vector<Point> sq{{1, 1}, {0, 0}, {1, 0}, {0, 1}};
  auto s = build_delaunay(sq);
  CHECK(s.edge_count() == 5);
  CHECK(s.adjacent(2, 3));
  CHECK_FALSE(s.adjacent(0, 1));
  std::vector<Point> sq2{{0, 1}, {1, 0}, {1, 1}, {0, 0}};
  auto s2 = build_delaunay(sq2);
  CHECK(s2.adjacent(0, 1));
  CHECK_FALSE(s2.adjacent(2, 3));

  CHECK_THROWS_AS(build_delaunay({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), DegeneracyError);
  CHECK_THROWS_AS(build_delaunay({{0, 0}, {1, 1}}), DegeneracyError);
  CHECK_THROWS_AS(build_delaunay({{0, 0}, {1, 1}, {0, 1}, {1, 1}}), DegeneracyError);
}

TEST_CASE("collinear subsets and grids triangulate") {
  std::vector<Point> grid;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) grid.push_back({0.1 * i, 0.1 * j});
  auto g = build_delaunay(grid);
  // Triangulation of a convex polygon with h hull points: 2n - 2 - h triangles.
  CHECK(g.triangles().size() == 2 * 30 - 2 - 18);
  CHECK(g.edge_count() == 3 * 30 - 3 - 18);
}

TEST_CASE("random point sets satisfy the empty-circumcircle property") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    std::vector<Point> pts(200);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    auto g = build_delaunay(pts);
    for (const auto& t : g.triangles()) {
      CHECK(orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) == 1);
      for (int m = 0; m < 200; ++m) {
        if (m == t[0] || m == t[1] || m == t[2]) continue;
        CHECK(incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[m]) <= 0);
      }
    }
    for (int i = 0; i < 200; ++i) {
      CHECK(g.degree(i) >= 2);
      for (int j : g.neighbors(i)) CHECK(g.adjacent(j, i));
    }
  }
}

TEST_CASE("triangles match the brute-force Delaunay oracle") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<Point> pts(30);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    auto g = build_delaunay(pts);
    std::set<Tri> got;
    for (const auto& t : g.triangles()) got.insert(sorted(t));
    CHECK(got == brute_force_triangles(pts));
  }
}

TEST_CASE("graph accessors and serialization") {
  auto g = small_graph(3, 50);
  CHECK(g->max_edge_length() > 0.0);
  CHECK(g->max_edge_length() < std::sqrt(2.0));
  const int v = g->nearest_vertex({0.5, 0.5});
  for (std::size_t i = 0; i < g->vertex_count(); ++i)
    CHECK(squared_distance(g->point(v), {0.5, 0.5}) <= squared_distance(g->points()[i], {0.5, 0.5}));
  auto back = graph_from_json(graph_to_json(*g));
  CHECK(back.points() == g->points());
  for (int i = 0; i < static_cast<int>(g->vertex_count()); ++i) CHECK(back.neighbors(i) == g->neighbors(i));
  std::istringstream csv("x,y\n0,0\n1,0\n0.5,0.75\n");
  auto pts = read_points_csv(csv);
  REQUIRE(pts.size() == 3);
  CHECK(pts[2] == Point{0.5, 0.75});
}

TEST_CASE("jump_log_ratio hand evaluation, domain and monotonicity") {
  // xT at the origin, x at distance 1, y at distance 0.5.
  auto g = std::make_shared<const DelaunayGraph>(
      build_delaunay({{0, 0}, {1, 0}, {0.3, 0.4}, {0.5, -0.7}, {1.6, 0.9}}));
  REQUIRE(g->adjacent(1, 2));
  DelaunayBridgeSpec spec(g, 1, 0, 2.0, 0.13);
  CHECK(jump_log_ratio(spec, 1.0, 1, 2) == doctest::Approx(0.75 / 0.26).epsilon(1e-14));
  CHECK(std::exp(jump_log_ratio(spec, 1.0, 1, 2)) == doctest::Approx(17.9).epsilon(2e-3));
  REQUIRE_FALSE(g->adjacent(0, 4));
  CHECK_THROWS_AS(jump_log_ratio(spec, 1.0, 0, 4), DomainError);
  CHECK_THROWS_AS(jump_log_ratio(spec, 2.0, 1, 2), DomainError);
  double prev = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double t = 2.0 * (1.0 - std::pow(0.9, i));
    const double r = jump_log_ratio(spec, t, 1, 2);
    CHECK(r > prev);
    prev = r;
  }
  // Equidistant neighbor: ratio exactly 1.
  auto e = std::make_shared<const DelaunayGraph>(
      build_delaunay({{0, 0}, {1, 0}, {0.6, 0.8}, {0.2, -0.9}, {1.5, 0.6}}));
  REQUIRE(e->adjacent(1, 2));
  DelaunayBridgeSpec es(e, 1, 0, 1.0, 0.3);
  CHECK(jump_log_ratio(es, 0.4, 1, 2) == 0.0);
}

TEST_CASE("rate monotonicity sign matches the distance improvement") {
  auto g = small_graph(21, 60);
  DelaunayBridgeSpec spec(g, 0, 5, 1.0, 0.1);
  for (int x = 0; x < static_cast<int>(g->vertex_count()); ++x)
    for (int y : g->neighbors(x)) {
      const double a = jump_log_ratio(spec, 0.2, x, y);
      const double b = jump_log_ratio(spec, 0.9, x, y);
      const double improvement = spec.target_sq_distance(x) - spec.target_sq_distance(y);
      if (improvement > 0) CHECK(b > a);
      if (improvement < 0) CHECK(b < a);
      if (improvement == 0) CHECK(b == a);
    }
}

TEST_CASE("log_psi integrand structure") {
  auto g = small_graph(4);
  const int x0 = g->nearest_vertex({0.3, 0.3}), xT = g->nearest_vertex({0.7, 0.7});
  DelaunayBridgeSpec spec(g, x0, xT, 1.0, 0.1);
  for (double s : {0.0, 0.5, 0.99}) {
    for (int x = 0; x < static_cast<int>(g->vertex_count()); ++x) {
      double expected = -spec.target_sq_distance(x) / (2 * 0.1 * (1 - s) * (1 - s));
      for (int y : g->neighbors(x)) expected += std::exp(jump_log_ratio(spec, s, x, y)) - 1.0;
      CHECK(log_psi_integrand(spec, s, x) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  // At x_T the quadratic term vanishes and the sum tends to -degree.
  CHECK(log_psi_integrand(spec, 1.0 - 1e-9, xT) == doctest::Approx(-g->degree(xT)).epsilon(1e-12));
  double v = 0.0;
  for (int y : g->neighbors(x0)) v += std::exp(jump_log_ratio(spec, 0.5, x0, y));
  CHECK(lyapunov_V(spec, 0.5, x0) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("guided walk hits the target when x0 neighbors x_T") {
  auto g = small_graph(5, 100);
  const int xT = g->nearest_vertex({0.5, 0.5});
  const int x0 = g->neighbors(xT).front();
  DelaunayBridgeSpec spec(g, x0, xT, 10.0, 0.05);
  auto paths = run_replicates(1000, 1, [&](Rng& rng, std::size_t) { return simulate_guided_jump(spec, rng); });
  int hits = 0;
  for (const auto& wp : paths) {
    hits += wp.endpoint_hit ? 1 : 0;
    CHECK(wp.valid);
    CHECK(std::isfinite(wp.log_psi));
  }
  CHECK(hits == 1000);
}

TEST_CASE("guided walk is deterministic per seed") {
  auto g = small_graph(6, 100);
  DelaunayBridgeSpec spec(g, g->nearest_vertex({0.3, 0.3}), g->nearest_vertex({0.7, 0.7}), 1.0, 0.05);
  auto a = simulate_guided_jump(spec, 77);
  auto b = simulate_guided_jump(spec, 77);
  const auto& pa = std::get<PiecewiseConstantPath>(a.path);
  const auto& pb = std::get<PiecewiseConstantPath>(b.path);
  CHECK(pa.jump_times() == pb.jump_times());
  CHECK(pa.states() == pb.states());
  CHECK(a.log_psi == b.log_psi);
}

TEST_CASE("frozen walk is the unconditioned unit-rate walk") {
  auto g = small_graph(7, 30);
  const int x0 = g->nearest_vertex({0.5, 0.5});
  DelaunayBridgeSpec spec(g, x0, x0 == 0 ? 1 : 0, 1.0, 0.1);
  const int n = 40000;
  struct Out {
    double first = 0;
    double jumps = 0;
  };
  auto res = run_replicates(n, 2, [&](Rng& rng, std::size_t) {
    auto wp = simulate_guided_jump(spec, rng, GuidedOptions{true});
    const auto& p = std::get<PiecewiseConstantPath>(wp.path);
    return Out{p.jump_count() ? p.jump_times().front() : 1.0, static_cast<double>(p.jump_count())};
  });
  // First jump ~ Exp(degree), observed through min(., 1).
  const double deg = g->degree(x0);
  double mean_first = 0, mean_jumps = 0, m2 = 0;
  for (const auto& o : res) {
    mean_first += o.first / n;
    mean_jumps += o.jumps / n;
    m2 += o.jumps * o.jumps / n;
  }
  const double e_first = (1.0 - std::exp(-deg)) / deg;
  CHECK(std::abs(mean_first - e_first) < 3.0 * (1.0 / deg) / std::sqrt(n));
  // E[N_1] = int_0^1 (e^{sQ} deg)(x0) ds, by Simpson on exact matrix exponentials.
  const Eigen::MatrixXd Q = graph_generator(*g);
  const Eigen::VectorXd d = -Q.diagonal();
  const int m = 200;
  double expected = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double s = static_cast<double>(i) / m;
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    expected += w * (Eigen::MatrixXd(Q * s).exp() * d)(x0) / (3.0 * m);
  }
  const double sd = std::sqrt(m2 - mean_jumps * mean_jumps);
  CHECK(std::abs(mean_jumps - expected) < 3.0 * sd / std::sqrt(n));
  CHECK(std::abs(mean_jumps - deg) < 0.5 * deg);
}

TEST_CASE("log_psi_kappa matches dense quadrature on sample paths") {
  auto g = small_graph(5);
  const int x0 = g->nearest_vertex({0.3, 0.3}), xT = g->nearest_vertex({0.7, 0.7});
  DelaunayBridgeSpec spec(g, x0, xT, 1.0, 0.4);
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    auto wp = simulate_guided_jump(spec, seed);
    REQUIRE(wp.valid);
    const auto& p = std::get<PiecewiseConstantPath>(wp.path);
    auto k = log_psi_kappa_delaunay(spec, p);
    CHECK(k.log_constant == doctest::Approx(std::log(2 * M_PI * 0.4)).epsilon(1e-15));
    CHECK(std::abs(k.log_psi - graded_quadrature(spec, p, 100000)) < 1e-6);
    CHECK(wp.log_psi == doctest::Approx(k.log_psi).epsilon(1e-12));
  }
  // Uniform grid when the hit is well before T.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 200 && checked < 5; ++seed) {
    auto wp = simulate_guided_jump(spec, seed);
    const auto& p = std::get<PiecewiseConstantPath>(wp.path);
    if (p.jump_times().back() > 0.9) continue;
    auto dense = accumulate_log_weight(p, delaunay_integrand(spec), Quadrature::riemann(100000));
    CHECK(std::abs(dense.value - wp.log_psi) < 1e-6);
    ++checked;
  }
  CHECK(checked == 5);
  PiecewiseConstantPath miss(1.0, x0);
  CHECK_THROWS_AS(log_psi_kappa_delaunay(spec, miss), DivergenceError);
}

TEST_CASE("exact_h_small_graph") {
  auto two = build_delaunay({{0, 0}, {1, 0}, {0.5, 0.9}});
  auto tab = exact_h_small_graph(two, 1.0, 2, {0.0, 0.4, 1.0});
  CHECK(tab.h(2, 2) == 1.0);
  CHECK(tab.h(2, 0) == 0.0);
  // Triangle K3: h(t, x != xT) = (1 - e^{-3 (T - t)}) / 3.
  CHECK(tab.h(0, 0) == doctest::Approx((1 - std::exp(-3.0)) / 3).epsilon(1e-12));
  CHECK(tab.h(1, 1) == doctest::Approx((1 - std::exp(-1.8)) / 3).epsilon(1e-12));
  auto g = small_graph(8, 30);
  const Eigen::MatrixXd P = (graph_generator(*g) * 0.7).exp();
  for (Eigen::Index i = 0; i < P.rows(); ++i) CHECK(std::abs(P.row(i).sum() - 1.0) < 1e-10);
  auto big = small_graph(9, 700);
  CHECK_THROWS_AS(exact_h_small_graph(*big, 1.0, 0, {0.0}), SizeError);
}

TEST_CASE("two-state chain closed form through the generator") {
  // A single edge is not a triangulation, so check the 2-state formula on the
  // generator directly: h = (1 - e^{-2 tau}) / 2.
  Eigen::Matrix2d Q;
  Q << -1, 1, 1, -1;
  for (double tau : {0.1, 0.5, 2.0}) {
    const Eigen::Matrix2d P = (Q * tau).exp();
    CHECK(P(0, 1) == doctest::Approx((1 - std::exp(-2 * tau)) / 2).epsilon(1e-13));
  }
}

TEST_CASE("importance estimates match the oracle bridge marginal") {
  auto g = small_graph(5);
  REQUIRE(g->vertex_count() <= 30);
  const int x0 = g->nearest_vertex({0.3, 0.3}), xT = g->nearest_vertex({0.7, 0.7});
  DelaunayBridgeSpec spec(g, x0, xT, 1.0, 0.4);
  auto oracle = bridge_marginal(spec, 0.5);
  CHECK(oracle.sum() == doctest::Approx(1.0).epsilon(1e-10));
  auto paths = run_replicates(20000, 31, [&](Rng& rng, std::size_t) { return simulate_guided_jump(spec, rng); });
  for (int x = 0; x < static_cast<int>(g->vertex_count()); ++x) {
    auto r = importance_estimate(
        paths,
        [&](const WeightedPath& wp) {
          return std::get<PiecewiseConstantPath>(wp.path).state_at(0.5) == x ? 1.0 : 0.0;
        },
        Normalization::SelfNormalized);
    const double p = oracle[x];
    const double sigma = std::max(r.std_error, std::sqrt(p * (1 - p) / r.effective_sample_size));
    CHECK(std::abs(r.estimate - p) <= 3.0 * sigma + 1e-12);
  }
}

TEST_CASE("greedy neighbor reports") {
  auto g = small_graph(11, 100);
  const int xT = g->nearest_vertex({0.5, 0.5});
  auto report = greedy_neighbor_exists(*g, xT);
  auto boundary = boundary_vertices(*g);
  for (int y : g->neighbors(xT)) CHECK(report[y]);
  CHECK(report[xT]);
  for (int v : greedy_neighbor_violations(*g, xT)) CHECK(boundary[v]);
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    auto h = small_graph(seed, 100);
    const int t = h->nearest_vertex({0.5, 0.5});
    auto b = boundary_vertices(*h);
    for (int v : greedy_neighbor_violations(*h, t)) CHECK(b[v]);
  }
  // Isosceles: a and b are exactly as far from xT as x, c is strictly closer.
  auto iso = build_delaunay({{0, 2}, {0, 0}, {-1.2, 0.4}, {1.2, 0.4}, {0, 1.0}});
  REQUIRE(iso.adjacent(1, 2));
  REQUIRE(iso.adjacent(1, 3));
  REQUIRE(iso.adjacent(1, 4));
  CHECK(squared_distance(iso.point(2), iso.point(0)) == squared_distance(iso.point(1), iso.point(0)));
  CHECK(greedy_neighbor_exists(iso, 0)[1]);
  // Tied neighbors alone do not count: a and b share x's distance exactly.
  CHECK_FALSE(squared_distance(iso.point(3), iso.point(0)) < squared_distance(iso.point(1), iso.point(0)));
}

TEST_CASE("quadratic-variation scale on a Brownian surrogate") {
  Rng rng(12);
  const double c = 0.37, dt = 1e-3, horizon = 200.0;
  std::vector<Point> inc;
  for (double t = 0; t < horizon; t += dt) inc.push_back({std::sqrt(c * dt) * rng.normal(), std::sqrt(c * dt) * rng.normal()});
  CHECK(quadratic_variation_scale(inc, horizon) == doctest::Approx(c).epsilon(0.05));
}

TEST_CASE("estimate_atilde errors and CLT scaling") {
  auto pts = sample_poisson_points(500, Window{}, 3);
  auto torus = build_periodic_delaunay(pts, Window{});
  for (std::size_t i = 0; i < torus.points.size(); ++i) CHECK(torus.neighbors[i].size() >= 3);
  CHECK_THROWS_AS(estimate_atilde(torus, 1.0, 1), InsufficientDataError);
  auto sd = [&](double horizon) {
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 50; ++s) v.push_back(estimate_atilde(torus, horizon, s).a_tilde);
    double m = 0;
    for (double x : v) m += x / 50;
    double q = 0;
    for (double x : v) q += (x - m) * (x - m) / 49;
    return std::sqrt(q);
  };
  const double ratio = sd(400.0) / sd(200.0);
  CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.3));
}
