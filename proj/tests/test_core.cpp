#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "gbridge/core/diagnostics.hpp"
#include "gbridge/core/error.hpp"
#include "gbridge/core/estimate.hpp"
#include "gbridge/core/mcmc.hpp"
#include "gbridge/core/path.hpp"
#include "gbridge/core/path_io.hpp"
#include "gbridge/core/replicate.hpp"
#include "gbridge/core/rng.hpp"
#include "gbridge/core/weights.hpp"
#include "gbridge/poisson/poisson.hpp"

using namespace gbridge;

namespace {

GridPath uniform_grid_path(std::size_t n, double T, int dim = 1) {
  std::vector<double> t(n + 1);
  std::vector<Eigen::VectorXd> x(n + 1, Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::VectorXd> z(n, Eigen::VectorXd::Zero(dim));
  for (std::size_t i = 0; i <= n; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n);
  return GridPath(t, x, z);
}

WeightedPath const_weight_path(double log_psi) {
  WeightedPath wp(PiecewiseConstantPath(1.0, 0));
  wp.log_psi = log_psi;
  wp.endpoint_hit = true;
  return wp;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("piecewise-constant path invariants") {
  PiecewiseConstantPath p(1.0, {0.2, 0.5}, {0, 1, 2});
  CHECK(p.state_at(0.0) == 0);
  CHECK(p.state_at(0.2) == 1);
  CHECK(p.state_at(0.49) == 1);
  CHECK(p.state_at(0.99) == 2);
  CHECK(p.interval_count() == 3);
  CHECK_THROWS(PiecewiseConstantPath(1.0, {0.5, 0.2}, {0, 1, 2}));
  CHECK_THROWS(PiecewiseConstantPath(1.0, {0.5}, {0, 1, 2}));
  CHECK_THROWS(PiecewiseConstantPath(1.0, {1.5}, {0, 1}));
  CHECK_THROWS(PiecewiseConstantPath(0.0, 0));
  PiecewiseConstantPath q(1.0, 0);
  q.push_jump(0.3, 1);
  CHECK_THROWS(q.push_jump(0.3, 2));
}

TEST_CASE("grid path invariants") {
  std::vector<Eigen::VectorXd> x(3, Eigen::VectorXd::Zero(1));
  std::vector<Eigen::VectorXd> z(2, Eigen::VectorXd::Zero(1));
  CHECK_NOTHROW(GridPath({0.0, 0.5, 1.0}, x, z));
  CHECK_THROWS(GridPath({0.0, 0.5, 0.5}, x, z));
  CHECK_THROWS(GridPath({0.0, 0.5, 1.0}, x, std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Zero(1))));
}

TEST_CASE("accumulate_log_weight trivial integrands") {
  PiecewiseConstantPath p(1.0, {0.3, 0.7}, {0, 1, 2});
  auto two = [](double, std::int64_t) { return 2.0; };
  auto zero = [](double, std::int64_t) { return 0.0; };
  CHECK(accumulate_log_weight(p, two).value == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(accumulate_log_weight(p, zero).value == 0.0);
  CHECK(accumulate_log_weight(p, two, Quadrature::riemann(1000)).value ==
        doctest::Approx(2.0).epsilon(1e-12));
  auto g = uniform_grid_path(100, 1.0);
  auto gtwo = [](double, const Eigen::VectorXd&) { return 2.0; };
  CHECK(accumulate_log_weight(g, gtwo).value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("left-point Riemann rule on grid paths") {
  auto g = uniform_grid_path(4, 1.0);
  auto f = [](double t, const Eigen::VectorXd&) { return t; };
  // 0.25 * (0 + 0.25 + 0.5 + 0.75)
  CHECK(accumulate_log_weight(g, f).value == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("non-finite integrand flags the weight invalid") {
  PiecewiseConstantPath p(1.0, {0.5}, {0, 7});
  auto bad = [](double s, std::int64_t x) {
    return x == 7 && s > 0.8 ? std::numeric_limits<double>::infinity() : 1.0;
  };
  auto w = accumulate_log_weight(p, bad);
  CHECK_FALSE(w.valid);
  CHECK(std::isnan(w.value));
  CHECK(w.reason.find("x=7") != std::string::npos);
}

TEST_CASE("Poisson closed form agrees with adaptive quadrature on a two-interval path") {
  auto spec = poisson::InhomPoissonSpec::affine(0, 1, 1.0, 1.0, 0.25, 0.8);
  const double s1 = 0.37;
  PiecewiseConstantPath p(1.0, {s1}, {0, 1});
  auto integrand = [&](double s, std::int64_t x) { return poisson::log_psi_integrand(spec, s, x); };
  // Final interval in state xT: integrand is the constant -(lambda(xT) - lambda~).
  const double expected =
      (spec.lambda(0) - 0.8) * ((1.0 / 0.8) * std::log(1.0 / (1.0 - s1)) - s1) -
      (spec.lambda(1) - 0.8) * (1.0 - s1);
  auto closed = accumulate_log_weight(p, integrand, poisson::closed_form_quadrature(spec));
  auto adaptive = accumulate_log_weight(p, integrand, Quadrature::adaptive(1e-12));
  CHECK(closed.value == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(adaptive.value - expected) < 1e-10);
}

TEST_CASE("adaptive_simpson") {
  CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12) ==
        doctest::Approx(2.0).epsilon(1e-11));
  CHECK_THROWS_AS(adaptive_simpson([](double x) { return 1.0 / (x - 0.5) / 0.0; }, 0.0, 1.0, 1e-9),
                  std::domain_error);
}

TEST_CASE("importance_estimate trivial cases") {
  std::vector<WeightedPath> paths;
  for (int i = 0; i < 10; ++i) paths.push_back(const_weight_path(0.3));
  auto one = [](const WeightedPath&) { return 1.0; };
  auto r = importance_estimate(paths, one, Normalization::SelfNormalized);
  CHECK(r.estimate == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.effective_sample_size == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(r.std_error >= 0.0);

  std::vector<WeightedPath> single{const_weight_path(0.0)};
  auto three = [](const WeightedPath&) { return 3.0; };
  auto e = importance_estimate(single, three, Normalization::ExactH0, H0Pair{-1.2, -1.2});
  CHECK(e.estimate == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(e.n_samples == 1);
}

TEST_CASE("importance_estimate self-normalized against direct formulas") {
  const std::vector<double> lw{0.1, -2.0, 1.5, 0.0, -0.7};
  const std::vector<double> f{1.0, 2.0, -1.0, 0.5, 4.0};
  auto r = importance_estimate(lw, f, Normalization::SelfNormalized);
  double sw = 0, sw2 = 0, sfw = 0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    const double w = std::exp(lw[i]);
    sw += w;
    sw2 += w * w;
    sfw += f[i] * w;
  }
  const double mu = sfw / sw;
  double num = 0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    const double w = std::exp(lw[i]);
    num += w * w * (f[i] - mu) * (f[i] - mu);
  }
  CHECK(r.estimate == doctest::Approx(mu).epsilon(1e-13));
  CHECK(r.std_error == doctest::Approx(std::sqrt(num) / sw).epsilon(1e-12));
  CHECK(r.effective_sample_size == doctest::Approx(sw * sw / sw2).epsilon(1e-13));
  CHECK(r.effective_sample_size > 0.0);
  CHECK(r.effective_sample_size <= 5.0);
}

TEST_CASE("importance_estimate log-domain stability and invalid handling") {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lw{800.0, 800.0, -inf, std::nan("")};
  std::vector<double> f{1.0, 3.0, 10.0, 10.0};
  auto r = importance_estimate(lw, f, Normalization::SelfNormalized);
  CHECK(r.estimate == doctest::Approx(2.0));
  CHECK(r.n_invalid == 2);
  std::vector<double> all_bad{-inf, -inf};
  std::vector<double> f2{1.0, 1.0};
  CHECK_THROWS_AS(importance_estimate(all_bad, f2, Normalization::SelfNormalized), EstimationError);
  CHECK_THROWS_AS(importance_estimate(lw, f2, Normalization::SelfNormalized), DimensionError);
}

TEST_CASE("Poisson desk case: exact-h0 normalization is 1") {
  auto spec = poisson::InhomPoissonSpec::affine(0, 5, 1.0, 1.0, 0.25, 1.0);
  const double log_h0 = std::log(poisson::exact_h_table(spec, {0.0}).h(0, 0));
  const double log_ht0 = poisson::htilde_log(spec, 0.0, 0);
  auto paths = run_replicates(50000, 2024, [&](Rng& rng, std::size_t) {
    return poisson::simulate_guided_bridge(spec, rng);
  });
  auto r = importance_estimate(paths, [](const WeightedPath&) { return 1.0; },
                               Normalization::ExactH0, H0Pair{log_h0, log_ht0});
  CHECK(std::abs(r.estimate - 1.0) < 3.0 * r.std_error);
}

TEST_CASE("mh_independence_chain constant weights never reject") {
  auto sampler = [](Rng&) { return const_weight_path(0.4); };
  auto c = mh_independence_chain(sampler, 500, 3);
  CHECK(c.acceptance_rate == 1.0);
  CHECK(c.chain.size() == 500);
  auto one = mh_independence_chain(sampler, 1, 3);
  CHECK(one.chain.size() == 1);
  CHECK_THROWS(mh_independence_chain(sampler, 0, 3));
}

TEST_CASE("mh_independence_chain two-point stationary frequency") {
  auto sampler = [](Rng& rng) {
    auto wp = const_weight_path(rng.uniform() < 0.5 ? 0.0 : 1.0);
    return wp;
  };
  const std::size_t n = 100000;
  auto c = mh_independence_chain(sampler, n, 77);
  // Batch means for the autocorrelated chain.
  const std::size_t batches = 100;
  const std::size_t len = n / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    means[i / len] += (c.chain[i].log_psi > 0.5 ? 1.0 : 0.0) / static_cast<double>(len);
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  const double se = std::sqrt(var / batches);
  const double target = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(std::abs(mean - target) < 3.0 * se);
  CHECK(c.acceptance_rate > 0.0);
  CHECK(c.acceptance_rate < 1.0);
}

TEST_CASE("mh_independence_chain rejects invalid proposals and is deterministic") {
  auto sampler = [](Rng& rng) {
    auto wp = const_weight_path(rng.uniform());
    if (rng.uniform() < 0.2) wp.invalidate("synthetic");
    return wp;
  };
  auto a = mh_independence_chain(sampler, 2000, 9);
  auto b = mh_independence_chain(sampler, 2000, 9);
  CHECK(a.invalid_proposals > 0);
  CHECK(a.accepted == b.accepted);
  for (const auto& p : a.chain) CHECK(p.valid);
  for (std::size_t i = 0; i < a.chain.size(); ++i) CHECK(a.chain[i].log_psi == b.chain[i].log_psi);
}

TEST_CASE("pcn_step limits and errors") {
  Rng rng(5);
  std::vector<Eigen::VectorXd> z(50, Eigen::VectorXd::Constant(2, 0.7));
  Rng r1(11), r2(11);
  auto fresh = pcn_step(z, 50, 0.0, r1);
  Rng r3(11);
  for (const auto& v : fresh)
    for (Eigen::Index k = 0; k < v.size(); ++k) CHECK(v[k] == r3.normal());
  auto near = pcn_step(z, 50, 1.0 - 1e-12, r2);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK((near[i] - z[i]).norm() < 1e-5);
  CHECK_THROWS_AS(pcn_step(z, 49, 0.5, rng), DimensionError);
  CHECK_THROWS(pcn_step(z, 50, 1.0, rng));
  CHECK_THROWS(pcn_step(z, 50, -0.1, rng));
}

TEST_CASE("pcn_step preserves the standard normal marginal") {
  const std::size_t n = 100000;
  Rng src(21), rng(22);
  std::vector<Eigen::VectorXd> z(n, Eigen::VectorXd::Zero(1));
  for (auto& v : z) v[0] = src.normal();
  auto out = pcn_step(z, n, 0.7, rng);
  std::vector<double> xs(n);
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = out[i][0];
    s += xs[i];
    s2 += xs[i] * xs[i];
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  // Var of the sample variance for a normal is 2/n.
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = normal_cdf(xs[i]);
    d = std::max({d, std::abs(F - static_cast<double>(i) / n),
                  std::abs(F - static_cast<double>(i + 1) / n)});
  }
  CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sup_V_diagnostic basics") {
  PiecewiseConstantPath p(1.0, {0.4}, {0, 1});
  CHECK(sup_V_diagnostic(p, [](double, std::int64_t) { return 0.0; }) == 0.0);
  CHECK(sup_V_diagnostic(p, [](double s, std::int64_t x) { return x == 1 && s > 0.3 ? NAN : 0.0; }) ==
        std::numeric_limits<double>::infinity());
  auto g = uniform_grid_path(100, 1.0);
  const double s = sup_V_diagnostic(g, [](double t, const Eigen::VectorXd&) { return t; });
  CHECK(s >= 1.0 - 0.01 - 1e-15);
  CHECK(s <= 1.0);
}

TEST_CASE("sup_V_diagnostic on a Poisson path matches dense re-evaluation") {
  auto spec = poisson::InhomPoissonSpec::affine(0, 3, 1.0, 1.0, 0.5, 1.0);
  PiecewiseConstantPath p(1.0, {0.2, 0.55, 0.9}, {0, 1, 2, 3});
  auto V = [&](double t, std::int64_t x) { return poisson::lyapunov_V(spec, t, x); };
  const double sup = sup_V_diagnostic(p, V);
  double dense = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double t = 0.9 * (i + 0.5) / n;
    dense = std::max(dense, V(t, p.state_at(t)));
  }
  CHECK(sup >= dense);
  CHECK(sup == doctest::Approx(dense).epsilon(1e-4));
}

TEST_CASE("sup_V_diagnostic is monotone under path extension") {
  auto V = [](double t, std::int64_t x) { return std::sin(3.0 * t) + 0.1 * static_cast<double>(x); };
  Rng rng(4);
  PiecewiseConstantPath longer(2.0, 0);
  double t = 0.0;
  std::int64_t x = 0;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 30; ++k) {
    t += 0.05 * rng.uniform();
    x += rng.uniform() < 0.5 ? 1 : -1;
    longer.push_jump(t, x);
    PiecewiseConstantPath prefix(2.0, longer.jump_times(), longer.states());
    const double s = sup_V_diagnostic(prefix, V);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("run_replicates output is independent of thread count") {
  auto fn = [](Rng& rng, std::size_t i) { return rng.uniform() + static_cast<double>(i); };
  auto a = run_replicates(1000, 99, fn, 1);
  auto b = run_replicates(1000, 99, fn, 7);
  CHECK(a == b);
}

TEST_CASE("path CSV round trip and envelope") {
  PiecewiseConstantPath p(1.0, {0.1234567890123456789, 0.5}, {3, 4, 5});
  std::istringstream is(path_csv(p));
  auto q = read_jump_path_csv(is);
  CHECK(q.jump_times() == p.jump_times());
  CHECK(q.states() == p.states());
  CHECK(q.horizon() == p.horizon());
  CHECK(format_double(0.1) == "0.10000000000000001");
  WeightedPath wp(p);
  wp.log_psi = -1.5;
  wp.seed = 42;
  auto j = path_envelope(wp);
  CHECK(j["log_psi"].get<double>() == -1.5);
  CHECK(j["seed"].get<std::uint64_t>() == 42);
  CHECK(j.contains("sup_V"));
  CHECK(j.contains("endpoint_hit"));
}
