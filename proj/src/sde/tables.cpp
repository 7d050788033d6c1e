#include "gbridge/sde/tables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gbridge/core/error.hpp"

namespace gbridge::sde {

DeltaScaling DeltaScaling::identity(int m) {
  return {[m](double) { return Vector::Ones(m); }};
}

DeltaScaling DeltaScaling::inverse_time_to_go(int m, double T, double power) {
  return {[m, T, power](double t) { return Vector::Constant(m, std::pow(T - t, -power)); }};
}

BackwardTables::BackwardTables(std::vector<double> grid, std::vector<Matrix> L,
                               std::vector<Matrix> Minv, std::vector<Vector> mu)
    : grid_(std::move(grid)), L_(std::move(L)), Minv_(std::move(Minv)), mu_(std::move(mu)) {
  if (grid_.size() < 2) throw DimensionError("BackwardTables: need at least two nodes");
  if (L_.size() != grid_.size() || Minv_.size() != grid_.size() || mu_.size() != grid_.size())
    throw DimensionError("BackwardTables: table lengths differ from the grid");
}

std::pair<std::size_t, double> BackwardTables::locate(double t) const {
  if (t < grid_.front() || t > grid_.back())
    throw DomainError("BackwardTables: t = " + std::to_string(t) + " outside the table grid");
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  std::size_t k = static_cast<std::size_t>(it - grid_.begin());
  if (k == 0) return {0, 0.0};
  --k;
  if (k == grid_.size() - 1) return {k - 1, 1.0};
  const double w = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
  return {k, w};
}

Matrix BackwardTables::L(double t) const {
  const auto [k, w] = locate(t);
  if (w == 0.0) return L_[k];
  if (w == 1.0) return L_[k + 1];
  return (1.0 - w) * L_[k] + w * L_[k + 1];
}

Matrix BackwardTables::Minv(double t) const {
  const auto [k, w] = locate(t);
  if (w == 0.0) return Minv_[k];
  if (w == 1.0) return Minv_[k + 1];
  return (1.0 - w) * Minv_[k] + w * Minv_[k + 1];
}

Vector BackwardTables::mu(double t) const {
  const auto [k, w] = locate(t);
  if (w == 0.0) return mu_[k];
  if (w == 1.0) return mu_[k + 1];
  return (1.0 - w) * mu_[k] + w * mu_[k + 1];
}

BackwardTables solve_backward_tables(const LinearAuxiliarySpec& aux,
                                     const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("solve_backward_tables: grid too short");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("solve_backward_tables: grid must be strictly increasing");
  const int m = aux.obs_dim();
  if (aux.v.size() != m) throw DimensionError("solve_backward_tables: v has wrong length");

  const std::size_t n = grid.size();
  std::vector<Matrix> Ls(n), Minvs(n);
  std::vector<Vector> mus(n);
  Ls[n - 1] = aux.L;
  Minvs[n - 1] = Matrix::Zero(m, m);
  mus[n - 1] = Vector::Zero(m);

  // RK4 backward in time; only L enters the right-hand sides.
  auto dL = [&](double t, const Matrix& L) -> Matrix { return -L * aux.B_tilde(t); };
  auto dmu = [&](double t, const Matrix& L) -> Vector { return -L * aux.beta_tilde(t); };
  auto dMinv = [&](double t, const Matrix& L) -> Matrix {
    return -L * aux.a_tilde(t) * L.transpose();
  };

  for (std::size_t i = n - 1; i > 0; --i) {
    const double t1 = grid[i];
    const double h = grid[i - 1] - t1;
    const double tm = t1 + 0.5 * h;
    const double t0 = grid[i - 1];
    const Matrix& L = Ls[i];

    const Matrix k1 = dL(t1, L);
    const Matrix L2 = L + 0.5 * h * k1;
    const Matrix k2 = dL(tm, L2);
    const Matrix L3 = L + 0.5 * h * k2;
    const Matrix k3 = dL(tm, L3);
    const Matrix L4 = L + h * k3;
    const Matrix k4 = dL(t0, L4);

    Ls[i - 1] = L + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    mus[i - 1] = mus[i] + h / 6.0 * (dmu(t1, L) + 2.0 * dmu(tm, L2) + 2.0 * dmu(tm, L3) +
                                     dmu(t0, L4));
    Matrix Mi = Minvs[i] + h / 6.0 * (dMinv(t1, L) + 2.0 * dMinv(tm, L2) +
                                      2.0 * dMinv(tm, L3) + dMinv(t0, L4));
    Minvs[i - 1] = 0.5 * (Mi + Mi.transpose());
  }
  return BackwardTables(grid, std::move(Ls), std::move(Minvs), std::move(mus));
}

HtildeQuantities htilde_quantities(const BackwardTables& tables, const LinearAuxiliarySpec& aux,
                                   double t, const Vector& x) {
  if (!(t < tables.T())) throw DomainError("htilde_quantities: t must be before T");
  const Matrix L = tables.L(t);
  const Matrix Minv = tables.Minv(t);
  const Eigen::LLT<Matrix> llt(Minv);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const auto diag = llt.matrixLLT().diagonal();
    ok = (diag.array() > 0.0).all() && diag.allFinite();
  }
  if (!ok) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(Minv, Eigen::EigenvaluesOnly);
    throw ConditioningError("M(t)^{-1} is not positive definite at t = " + std::to_string(t),
                            es.eigenvalues().minCoeff());
  }
  HtildeQuantities q;
  q.zeta = aux.v - tables.mu(t) - L * x;
  const Vector Mzeta = llt.solve(q.zeta);
  q.H = 0.5 * q.zeta.dot(Mzeta);
  const double log_det_minv = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double m = static_cast<double>(aux.obs_dim());
  q.log_eta = -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_minv;
  q.log_htilde = q.log_eta - q.H;
  q.r_tilde = L.transpose() * Mzeta;
  q.LtML = L.transpose() * llt.solve(L);
  return q;
}

}  // namespace gbridge::sde
