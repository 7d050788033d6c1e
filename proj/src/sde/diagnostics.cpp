#include "gbridge/sde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gbridge/core/error.hpp"

namespace gbridge::sde {

namespace {

Matrix scaled_L(const BackwardTables& tables, const DeltaScaling& delta, double t) {
  return delta.diagonal(t).asDiagonal() * tables.L(t);
}

}  // namespace

AssumptionTerms assumption_terms(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const DeltaScaling& delta,
                                 double t, const Vector& x, double alpha) {
  const double u = tables.T() - t;
  if (!(u > 0.0)) throw DomainError("assumption_terms: t must be before T");
  const Vector dg = delta.diagonal(t);
  const Matrix LD = dg.asDiagonal() * tables.L(t);

  AssumptionTerms out;
  out.t = t;
  // M_Delta^{-1} = Delta M^{-1} Delta.
  const Matrix MDinv = dg.asDiagonal() * tables.Minv(t) * dg.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (MDinv + MDinv.transpose()),
                                                 Eigen::EigenvaluesOnly);
  const double ev_min = es.eigenvalues().minCoeff();
  const double ev_max = es.eigenvalues().maxCoeff();
  out.scaled_lambda_min = ev_max > 0.0 ? u / ev_max : 0.0;
  out.scaled_lambda_max =
      ev_min > 0.0 ? u / ev_min : std::numeric_limits<double>::infinity();

  const Matrix a = spec.a(t, x);
  out.drift_mismatch = (LD * (aux.b_tilde(t, x) - spec.b(t, x))).norm();
  out.trace_a = (LD * a * LD.transpose()).trace();
  out.diffusion_gap = LD * (aux.a_tilde(t) - a) * LD.transpose();
  const Vector zeta_d = dg.asDiagonal() * (aux.v - tables.mu(t) - tables.L(t) * x);
  const double denom = std::max(zeta_d.norm(), std::pow(u, alpha));
  const Eigen::JacobiSVD<Matrix> svd(out.diffusion_gap);
  out.diffusion_ratio = svd.singularValues().size() ? svd.singularValues()(0) / denom : 0.0;
  return out;
}

AssumptionReport assumption_diagnostics(const SdeSpec& spec, const BackwardTables& tables,
                                        const LinearAuxiliarySpec& aux, const DeltaScaling& delta,
                                        const GridPath& path, double alpha) {
  AssumptionReport r;
  r.min_scaled_lambda_min = std::numeric_limits<double>::infinity();
  const auto& ts = path.times();
  const auto& xs = path.values();
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (!(ts[i] < tables.T())) break;
    AssumptionTerms a = assumption_terms(spec, tables, aux, delta, ts[i], xs[i], alpha);
    r.min_scaled_lambda_min = std::min(r.min_scaled_lambda_min, a.scaled_lambda_min);
    r.max_scaled_lambda_max = std::max(r.max_scaled_lambda_max, a.scaled_lambda_max);
    r.max_drift_mismatch = std::max(r.max_drift_mismatch, a.drift_mismatch);
    r.max_trace_a = std::max(r.max_trace_a, a.trace_a);
    r.max_diffusion_ratio = std::max(r.max_diffusion_ratio, a.diffusion_ratio);
    r.terms.push_back(std::move(a));
    ++r.points;
  }
  return r;
}

LipschitzReport lipschitz_sufficiency_check(const SdeSpec& spec, const BackwardTables& tables,
                                            const LinearAuxiliarySpec& aux,
                                            const ReducedDiffusion& a_bar,
                                            const DeltaScaling& delta,
                                            const std::vector<double>& t_grid,
                                            const std::vector<Vector>& x_samples) {
  if (t_grid.empty()) throw DomainError("lipschitz_sufficiency_check: empty time grid");
  for (double t : t_grid)
    if (!(t < tables.T())) throw DomainError("lipschitz_sufficiency_check: grid must stay before T");

  std::vector<Vector> ys;
  for (const auto& x : x_samples) {
    const Vector y = aux.L * x;
    for (double t : t_grid) {
      const Matrix lhs = a_bar(t, y);
      const Matrix rhs = spec.a(t, x);
      const double scale = std::max(1.0, rhs.norm());
      if ((lhs - rhs).norm() > 1e-10 * scale)
        throw ContractViolation("lipschitz_sufficiency_check: a_bar(t, Lx) != a(t, x)");
    }
    ys.push_back(y);
  }

  LipschitzReport r;
  auto F = [&](double t) {
    const Matrix LD = scaled_L(tables, delta, t);
    return Matrix(LD * aux.a_tilde(t) * LD.transpose());
  };
  for (std::size_t k = 0; k + 1 < t_grid.size(); ++k) {
    const double dt = t_grid[k + 1] - t_grid[k];
    if (dt == 0.0) continue;
    r.lipschitz_t = std::max(r.lipschitz_t, (F(t_grid[k + 1]) - F(t_grid[k])).norm() / std::abs(dt));
  }
  for (double t : t_grid) {
    const Matrix LD = scaled_L(tables, delta, t);
    for (std::size_t i = 0; i < ys.size(); ++i)
      for (std::size_t j = i + 1; j < ys.size(); ++j) {
        const double dy = (ys[i] - ys[j]).norm();
        if (dy == 0.0) continue;
        const Matrix diff = LD * (a_bar(t, ys[i]) - a_bar(t, ys[j])) * LD.transpose();
        r.lipschitz_y = std::max(r.lipschitz_y, diff.norm() / dy);
      }
  }
  const double t_last = t_grid.back();
  const Matrix LD = scaled_L(tables, delta, t_last);
  const Matrix limit_y = LD * a_bar(t_last, aux.v) * LD.transpose();
  r.limit_gap = (F(t_last) - limit_y).norm();
  r.limits_agree = r.limit_gap <= 1e-6;
  return r;
}

}  // namespace gbridge::sde
