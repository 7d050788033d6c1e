#include "gbridge/core/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gbridge/core/error.hpp"
#include "gbridge/kernels/kernels.hpp"

namespace gbridge {

EstimateReport importance_estimate(std::span<const WeightedPath> paths, const PathFunctional& f,
                                   Normalization normalization, std::optional<H0Pair> h0) {
  std::vector<double> lw(paths.size());
  std::vector<double> fv(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    const bool ok = p.valid && std::isfinite(p.log_weight());
    lw[i] = ok ? p.log_weight() : -std::numeric_limits<double>::infinity();
    fv[i] = ok ? f(p) : 0.0;
  }
  return importance_estimate(lw, fv, normalization, h0);
}

EstimateReport importance_estimate(std::span<const double> log_weights,
                                   std::span<const double> f_values, Normalization normalization,
                                   std::optional<H0Pair> h0) {
  if (log_weights.size() != f_values.size())
    throw DimensionError("importance_estimate: weights and values differ in length");
  if (normalization == Normalization::ExactH0 && !h0)
    throw std::invalid_argument("exact-h0 normalization needs log h(0,x0) and log h~(0,x0)");

  const std::size_t n = log_weights.size();
  std::vector<double> lw(log_weights.begin(), log_weights.end());
  std::vector<double> fv(f_values.begin(), f_values.end());
  std::size_t invalid = 0;
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lw[i]) || !std::isfinite(fv[i])) {
      ++invalid;
      lw[i] = -std::numeric_limits<double>::infinity();
      fv[i] = 0.0;
      continue;
    }
    shift = std::max(shift, lw[i]);
  }
  if (!std::isfinite(shift))
    throw EstimationError("estimation impossible: every weight is zero or invalid");

  const kernels::WeightedSums s = kernels::weighted_moments(lw, fv, shift);
  if (!(s.sum_w > 0.0)) throw EstimationError("estimation impossible: weights sum to zero");

  EstimateReport r;
  r.n_samples = n;
  r.n_invalid = invalid;
  r.effective_sample_size = s.sum_w * s.sum_w / s.sum_w2;

  if (normalization == Normalization::SelfNormalized) {
    const double mu = s.sum_fw / s.sum_w;
    const double num = s.sum_f2w2 - 2.0 * mu * s.sum_fw2 + mu * mu * s.sum_w2;
    r.estimate = mu;
    r.std_error = std::sqrt(std::max(0.0, num)) / s.sum_w;
  } else {
    // y_i = f_i * exp(lw_i + c) = scale * f_i * w'_i.
    const double log_scale = shift + h0->log_htilde0 - h0->log_h0;
    const double nn = static_cast<double>(n);
    const double mean_w = s.sum_fw / nn;
    const double mean_w2 = s.sum_f2w2 / nn;
    const double scale = std::exp(log_scale);
    r.estimate = scale * mean_w;
    const double var = n > 1 ? std::max(0.0, (mean_w2 - mean_w * mean_w) * nn / (nn - 1.0)) : 0.0;
    r.std_error = scale * std::sqrt(var / nn);
  }
  return r;
}

}  // namespace gbridge
