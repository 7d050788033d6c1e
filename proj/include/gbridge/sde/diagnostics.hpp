#pragma once

// Empirical checks of the hypotheses under which guided and conditioned
// laws are equivalent. They report running extremes along a path; they are
// evidence, not proofs.

#include <functional>
#include <vector>

#include "gbridge/core/path.hpp"
#include "gbridge/sde/tables.hpp"

namespace gbridge::sde {

struct AssumptionTerms {
  double t = 0.0;
  /// (T - t) lambda_min(M_Delta) and (T - t) lambda_max(M_Delta).
  double scaled_lambda_min = 0.0;
  double scaled_lambda_max = 0.0;
  /// |L_Delta (b~ - b)|.
  double drift_mismatch = 0.0;
  /// tr(L_Delta a L_Delta').
  double trace_a = 0.0;
  /// L_Delta (a~ - a) L_Delta'.
  Matrix diffusion_gap;
  /// ||diffusion_gap|| / max(|zeta_Delta|, (T - t)^alpha).
  double diffusion_ratio = 0.0;
};

/// The four quantities at a single (t, x).
AssumptionTerms assumption_terms(const SdeSpec& spec, const BackwardTables& tables,
                                 const LinearAuxiliarySpec& aux, const DeltaScaling& delta,
                                 double t, const Vector& x, double alpha = 1.0);

struct AssumptionReport {
  double min_scaled_lambda_min = 0.0;
  double max_scaled_lambda_max = 0.0;
  double max_drift_mismatch = 0.0;
  double max_trace_a = 0.0;
  double max_diffusion_ratio = 0.0;
  std::size_t points = 0;
  std::vector<AssumptionTerms> terms;
};

/// Terms at every grid node t_i < T of the path and their extremes.
AssumptionReport assumption_diagnostics(const SdeSpec& spec, const BackwardTables& tables,
                                        const LinearAuxiliarySpec& aux, const DeltaScaling& delta,
                                        const GridPath& path, double alpha = 1.0);

/// a-bar(t, y) with a-bar(t, L x) = a(t, x).
using ReducedDiffusion = std::function<Matrix(double, const Vector&)>;

struct LipschitzReport {
  /// Finite-difference Lipschitz constant of t -> L_Delta a~ L_Delta'.
  double lipschitz_t = 0.0;
  /// Pairwise Lipschitz constant of y -> L_Delta a-bar(t, y) L_Delta', max over t.
  double lipschitz_y = 0.0;
  /// Distance between the two limits at the last grid time, and whether it is <= 1e-6.
  double limit_gap = 0.0;
  bool limits_agree = false;
};

/// `x_samples` supply the y = L x points; a-bar(t, L x) must equal a(t, x)
/// there (to 1e-10, relative), otherwise ContractViolation is thrown.
LipschitzReport lipschitz_sufficiency_check(const SdeSpec& spec, const BackwardTables& tables,
                                            const LinearAuxiliarySpec& aux,
                                            const ReducedDiffusion& a_bar,
                                            const DeltaScaling& delta,
                                            const std::vector<double>& t_grid,
                                            const std::vector<Vector>& x_samples);

}  // namespace gbridge::sde
