#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gbridge/core/error.hpp"
#include "gbridge/core/replicate.hpp"
#include "gbridge/core/rng.hpp"
#include "gbridge/landmarks/landmarks.hpp"
#include "gbridge/sde/guided.hpp"

using namespace gbridge;
using namespace gbridge::landmarks;

namespace {

LandmarkState state(std::initializer_list<std::initializer_list<double>> q,
                    std::initializer_list<std::initializer_list<double>> p) {
  LandmarkState s{Matrix(static_cast<int>(q.size()), static_cast<int>(q.begin()->size())),
                  Matrix(static_cast<int>(p.size()), static_cast<int>(p.begin()->size()))};
  int i = 0;
  for (auto& r : q) {
    int a = 0;
    for (double v : r) s.q(i, a++) = v;
    ++i;
  }
  i = 0;
  for (auto& r : p) {
    int a = 0;
    for (double v : r) s.p(i, a++) = v;
    ++i;
  }
  return s;
}

LandmarkState random_state(Rng& rng, int n, int d) {
  LandmarkState s{Matrix(n, d), Matrix(n, d)};
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      s.q(i, a) = rng.uniform(-1.0, 1.0);
      s.p(i, a) = rng.normal();
    }
  return s;
}

NoiseFieldSpec grid_noise(int per_side, double lo, double hi, double tau, double gamma, int d) {
  NoiseFieldSpec ns;
  ns.tau = tau;
  ns.gamma = Vector::Constant(d, gamma);
  for (int i = 0; i < per_side; ++i)
    for (int j = 0; j < (d == 2 ? per_side : 1); ++j) {
      Vector c(d);
      const double h = per_side > 1 ? (hi - lo) / (per_side - 1) : 0.0;
      c(0) = lo + i * h;
      if (d == 2) c(1) = lo + j * h;
      ns.centers.push_back(c);
    }
  return ns;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("hamiltonian hand values") {
  KernelSpec k;
  auto one = state({{0.3, -0.2}}, {{1.5, 2.0}});
  CHECK(hamiltonian(k, one) == doctest::Approx(0.5 * (1.5 * 1.5 + 4.0)));
  auto still = state({{0.0}, {1.0}, {3.0}}, {{0.0}, {0.0}, {0.0}});
  CHECK(hamiltonian(k, still) == 0.0);
  auto two = state({{0.0}, {1.0}}, {{1.0}, {1.0}});
  CHECK(hamiltonian(k, two) == doctest::Approx(1.0 + std::exp(-0.5)).epsilon(1e-15));
  CHECK(hamiltonian(k, two) == doctest::Approx(1.6065).epsilon(1e-4));
}

TEST_CASE("hamiltonian gradients") {
  KernelSpec k{0.7, 1.3};
  auto still = state({{0.0, 0.0}, {1.0, 0.5}}, {{0.0, 0.0}, {0.0, 0.0}});
  auto g0 = hamiltonian_gradients(k, still);
  CHECK(g0.dH_dp.isZero());
  CHECK(g0.dH_dq.isZero());

  Rng rng(91);
  const double h = 1e-6;
  for (int rep = 0; rep < 50; ++rep) {
    auto s = random_state(rng, 3, 2);
    auto g = hamiltonian_gradients(k, s);
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 2; ++a) {
        auto up = s, dn = s;
        up.q(i, a) += h;
        dn.q(i, a) -= h;
        CHECK(rel_err(g.dH_dq(i, a), (hamiltonian(k, up) - hamiltonian(k, dn)) / (2 * h)) < 1e-6);
        up = s;
        dn = s;
        up.p(i, a) += h;
        dn.p(i, a) -= h;
        CHECK(rel_err(g.dH_dp(i, a), (hamiltonian(k, up) - hamiltonian(k, dn)) / (2 * h)) < 1e-6);
      }
    CHECK(g.dH_dq.colwise().sum().norm() < 1e-12);
  }
  auto clash = state({{0.0}, {0.0}}, {{1.0}, {1.0}});
  CHECK_THROWS_AS(hamiltonian_gradients(k, clash), DegeneracyError);
}

TEST_CASE("noise matrix") {
  auto ns = grid_noise(3, -1.0, 1.0, 0.4, 0.8, 2);
  ns.gamma(1) = -0.5;
  Rng rng(5);
  auto s = random_state(rng, 2, 2);
  auto still = s;
  still.p.setZero();
  CHECK(noise_matrix(ns, still).bottomRows(4).isZero());

  auto far = s;
  far.q.row(1) << 20.0, -15.0;
  const Matrix Sf = noise_matrix(ns, far);
  for (int l = 0; l < ns.J(); ++l)
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(Sf(2 + a, l)) < 1e-20);
      CHECK(std::abs(Sf(6 + a, l)) < 1e-20);
    }

  // q-block is the frozen field; p-block is -d/dq <p, sigma_l(q)>.
  const Matrix S = noise_matrix(ns, s);
  const double h = 1e-6;
  for (int l = 0; l < ns.J(); ++l)
    for (int i = 0; i < 2; ++i) {
      const Vector z = s.q.row(i).transpose() - ns.centers[l];
      const Vector sig = ns.gamma * ns.Lambda(z);
      CHECK((S.block(2 * i, l, 2, 1) - sig).norm() < 1e-15);
      for (int a = 0; a < 2; ++a) {
        Vector zu = z, zd = z;
        zu(a) += h;
        zd(a) -= h;
        const double pu = s.p.row(i).dot(ns.gamma) * ns.Lambda(zu);
        const double pd = s.p.row(i).dot(ns.gamma) * ns.Lambda(zd);
        CHECK(rel_err(S(4 + 2 * i + a, l), -(pu - pd) / (2 * h)) < 1e-6);
      }
    }
}

TEST_CASE("noise jacobian matches finite differences") {
  auto ns = grid_noise(2, -0.5, 0.5, 0.6, 1.1, 2);
  Rng rng(17);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    auto s = random_state(rng, 2, 2);
    const Vector x = s.flatten();
    for (int l = 0; l < ns.J(); ++l) {
      const Matrix D = noise_jacobian(ns, s, l);
      for (int c = 0; c < x.size(); ++c) {
        Vector xu = x, xd = x;
        xu(c) += h;
        xd(c) -= h;
        const Vector fd = (noise_matrix(ns, LandmarkState::unflatten(xu, 2, 2)).col(l) -
                           noise_matrix(ns, LandmarkState::unflatten(xd, 2, 2)).col(l)) /
                          (2 * h);
        for (int r = 0; r < x.size(); ++r) CHECK(rel_err(D(r, c), fd(r)) < 1e-6);
      }
    }
  }
  CHECK_THROWS_AS(noise_jacobian(ns, random_state(rng, 2, 2), 4), DomainError);
}

TEST_CASE("ito drift limits") {
  KernelSpec k;
  Rng rng(3);
  auto s = random_state(rng, 2, 2);
  auto quiet = grid_noise(2, -1.0, 1.0, 0.5, 0.0, 2);
  CHECK((ito_drift(k, quiet, s) - hamiltonian_drift(k, s)).norm() == 0.0);
  // A huge tau makes every field numerically constant.
  auto flat = grid_noise(2, -1.0, 1.0, 1e9, 1.0, 2);
  CHECK(ito_correction(flat, s).norm() < 1e-15);
  auto g = hamiltonian_gradients(k, s);
  const Vector hd = hamiltonian_drift(k, s);
  CHECK((hd.head(4) - LandmarkState{g.dH_dp, g.dH_dp}.flatten().head(4)).norm() == 0.0);
}

TEST_CASE("ito correction matches one-step Heun simulation") {
  KernelSpec k;
  NoiseFieldSpec ns;
  ns.tau = 0.5;
  ns.gamma = Vector::Constant(1, 0.9);
  ns.centers = {Vector::Constant(1, -0.2), Vector::Constant(1, 0.4)};
  auto s = state({{-0.3}, {0.5}}, {{0.7}, {-0.4}});
  const Vector x = s.flatten();
  const double dt = 1e-4;
  const Vector b0 = hamiltonian_drift(k, s);
  const Matrix S0 = noise_matrix(ns, s);
  const Vector c = ito_correction(ns, s);

  CHECK(c.norm() > 0.1);

  // X_dt - x - b dt - S0 dW keeps the mean and drops the O(sqrt dt) noise.
  const std::size_t n = 1000000;
  auto samples = run_replicates(n, 2024, [&](Rng& rng, std::size_t) {
    Vector dw(2);
    dw << rng.normal() * std::sqrt(dt), rng.normal() * std::sqrt(dt);
    const Vector pred = x + b0 * dt + S0 * dw;
    const auto sp = LandmarkState::unflatten(pred, 2, 1);
    const Vector next =
        x + 0.5 * (b0 + hamiltonian_drift(k, sp)) * dt + 0.5 * (S0 + noise_matrix(ns, sp)) * dw;
    return Vector((next - x - b0 * dt - S0 * dw) / dt);
  });
  Vector mean = Vector::Zero(4), sq = Vector::Zero(4);
  for (const auto& v : samples) {
    mean += v;
    sq += v.cwiseProduct(v);
  }
  mean /= static_cast<double>(n);
  sq /= static_cast<double>(n);
  for (int r = 0; r < 4; ++r) {
    const double se = std::sqrt((sq(r) - mean(r) * mean(r)) / n);
    // Heun's own bias is O(dt) relative to the correction.
    CHECK(std::abs(mean(r) - c(r)) < 3.0 * se + 1e-3 * (1.0 + std::abs(c(r))));
  }
}

TEST_CASE("auxiliary process construction") {
  KernelSpec k{0.8, 1.0};
  auto ns = grid_noise(3, -1.0, 1.0, 0.5, 0.7, 2);
  auto target = state({{0.0, 0.1}, {0.6, -0.4}, {-0.5, 0.3}}, {{0.2, 0.0}, {-0.1, 0.3}, {0.0, 0.5}});
  auto aux = build_landmark_auxiliary(k, ns, target.q, target.p);
  const Matrix B = aux.B_tilde(0.3);
  const Matrix G = gram_matrix(k, target.q);
  CHECK((B.topRightCorner(6, 6) - G).norm() == 0.0);
  CHECK(B.leftCols(6).isZero());
  CHECK(B.bottomRightCorner(6, 6).isZero());
  CHECK(G(0, 2) == doctest::Approx(k((target.q.row(0) - target.q.row(1)).norm())));
  CHECK(G(0, 3) == 0.0);
  CHECK(aux.beta_tilde(0.1).isZero());
  CHECK((aux.v - target.flatten().head(6)).norm() == 0.0);
  CHECK(aux.L.leftCols(6).isIdentity());
  CHECK(aux.L.rightCols(6).isZero());

  const Matrix sig = aux.sigma_tilde(0.0);
  CHECK((sig - aux.sigma_tilde(0.9)).norm() == 0.0);
  for (int l = 0; l < ns.J(); ++l)
    for (int i = 0; i < 3; ++i) {
      const Vector z = target.q.row(i).transpose() - ns.centers[l];
      CHECK((sig.block(2 * i, l, 2, 1) - ns.gamma * ns.Lambda(z)).norm() == 0.0);
    }

  auto single = build_landmark_auxiliary(k, ns, Matrix::Constant(1, 2, 0.3), Matrix::Zero(1, 2));
  CHECK(single.B_tilde(0.0).topRightCorner(2, 2).isIdentity());

  // At the frozen point the auxiliary drift equals the model's position drift.
  const Vector bt = aux.b_tilde(0.5, target.flatten());
  CHECK((bt.head(6) - hamiltonian_drift(k, target).head(6)).norm() < 1e-14);

  Matrix C = Matrix::Identity(6, 6) * -0.5;
  auto withC = build_landmark_auxiliary(k, ns, target.q, target.p, C);
  CHECK((withC.B_tilde(0.0).bottomRightCorner(6, 6) - C).norm() == 0.0);
  CHECK_THROWS_AS(build_landmark_auxiliary(k, ns, target.q, target.p, Matrix::Identity(3, 3)),
                  DimensionError);
  auto clash = target.q;
  clash.row(2) = clash.row(0);
  CHECK_THROWS_AS(build_landmark_auxiliary(k, ns, clash, target.p), DegeneracyError);
}

TEST_CASE("noise rank validation") {
  Matrix qT(3, 1);
  qT << -0.5, 0.1, 0.6;
  auto ns = grid_noise(3, -0.6, 0.6, 0.4, 1.0, 1);  // J = 3 = nd
  auto ok = validate_noise_rank(ns, 3, 1, qT);
  CHECK(ok.passes);
  CHECK(ok.count_ok);
  CHECK(ok.lambda_min > 1e-10);
  const Matrix sq = noise_matrix(ns, LandmarkState{qT, Matrix::Zero(3, 1)}).topRows(3);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(sq * sq.transpose());
  CHECK(ok.lambda_min == doctest::Approx(es.eigenvalues()(0)));

  auto few = ns;
  few.centers.pop_back();
  auto bad = validate_noise_rank(few, 3, 1, qT);
  CHECK_FALSE(bad.passes);
  CHECK_FALSE(bad.count_ok);
  CHECK(bad.message.find("J >= nd") != std::string::npos);

  auto dup = ns;
  dup.centers[1] = dup.centers[0];
  auto rank = validate_noise_rank(dup, 3, 1, qT);
  CHECK(rank.count_ok);
  CHECK_FALSE(rank.passes);
  CHECK(rank.lambda_min < 1e-10);

  // Every q-block column of landmark i is a multiple of gamma, so in d = 2
  // the rank is at most n whatever J is.
  Matrix q2(2, 2);
  q2 << -0.5, -0.5, 0.5, 0.5;
  auto wide = validate_noise_rank(grid_noise(3, -0.6, 0.6, 0.5, 1.0, 2), 2, 2, q2);
  CHECK(wide.count_ok);
  CHECK_FALSE(wide.passes);
  CHECK(wide.message.find("positive definite") != std::string::npos);
}

TEST_CASE("deterministic flow conserves the hamiltonian") {
  KernelSpec k;
  auto s0 = state({{-0.5}, {0.3}, {1.0}}, {{1.0}, {-0.5}, {0.2}});
  const double H0 = hamiltonian(k, s0);
  auto drift = [&](double dt) {
    Vector x = s0.flatten();
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < steps; ++i) x += dt * hamiltonian_drift(k, LandmarkState::unflatten(x, 3, 1));
    return std::abs(hamiltonian(k, LandmarkState::unflatten(x, 3, 1)) - H0);
  };
  const double coarse = drift(1e-3), fine = drift(1e-4);
  CHECK(fine < 1e-3 * H0);
  // First order: ten times smaller step, about ten times smaller drift.
  CHECK(coarse / fine == doctest::Approx(10.0).epsilon(0.2));
}

TEST_CASE("guided endpoint error decreases under refinement") {
  KernelSpec k{0.5, 1.0};
  NoiseFieldSpec ns;
  ns.tau = 0.5;
  ns.gamma = Vector::Constant(1, 0.3);
  ns.centers = {Vector::Constant(1, -0.5), Vector::Constant(1, 0.5)};
  auto init = state({{-0.5}, {0.5}}, {{0.5}, {-0.5}});
  Matrix qT(2, 1);
  qT << -0.2, 0.8;
  CHECK(validate_noise_rank(ns, 2, 1, qT).passes);
  auto m = landmark_model(k, ns, init, qT);
  double prev = 1e9;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const auto grid = sde::bridge_grid(m.T, static_cast<std::size_t>(std::lround(1.0 / h)));
    const auto tab = sde::solve_backward_tables(m.aux, grid);
    auto errs = run_replicates(200, 77, [&](Rng& rng, std::size_t) {
      auto wp = sde::simulate_guided_sde(m.spec, tab, m.aux, grid, rng);
      const Vector& xT = std::get<GridPath>(wp.path).terminal_value();
      return std::max(std::abs(xT(0) - qT(0, 0)), std::abs(xT(1) - qT(1, 0)));
    });
    double mean = 0.0;
    for (double e : errs) mean += e / 200.0;
    MESSAGE("h = " << h << ": mean endpoint error " << mean);
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("landmark CSV round trip") {
  Rng rng(12);
  auto s = random_state(rng, 4, 2);
  std::stringstream ss;
  write_landmarks_csv(ss, s);
  CHECK(ss.str().rfind("landmark,q0,q1,p0,p1\n", 0) == 0);
  auto back = read_landmarks_csv(ss);
  CHECK(back.q == s.q);
  CHECK(back.p == s.p);
  std::stringstream bad("landmark,q0\n0,1\n");
  CHECK_THROWS_AS(read_landmarks_csv(bad), DomainError);
}

TEST_CASE("flatten order") {
  auto s = state({{1, 2}, {3, 4}}, {{5, 6}, {7, 8}});
  const Vector x = s.flatten();
  for (int i = 0; i < 8; ++i) CHECK(x(i) == i + 1.0);
  auto back = LandmarkState::unflatten(x, 2, 2);
  CHECK(back.q == s.q);
  CHECK(back.p == s.p);
  CHECK_THROWS_AS(LandmarkState::unflatten(x, 3, 2), DimensionError);
}
