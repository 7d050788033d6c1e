#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "gbridge/core/path.hpp"

namespace gbridge {

enum class Normalization { ExactH0, SelfNormalized };

/// log h(0, x0) and log h~(0, x0) for exact-normalization estimates.
struct H0Pair {
  double log_h0 = 0.0;
  double log_htilde0 = 0.0;
};

struct EstimateReport {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_invalid = 0;
  double effective_sample_size = 0.0;
};

using PathFunctional = std::function<double(const WeightedPath&)>;

/// Importance-sampling estimate of E*[f] from guided paths.
///
/// ExactH0: mean of f * exp(log_weight + log h~0 - log h0).
/// SelfNormalized: sum f w / sum w with w = exp(log_weight); the standard
/// error is the delta-method one for the ratio estimator.
/// Invalid paths carry zero weight and are counted in n_invalid. Throws
/// EstimationError if no path has positive weight.
EstimateReport importance_estimate(std::span<const WeightedPath> paths, const PathFunctional& f,
                                   Normalization normalization,
                                   std::optional<H0Pair> h0 = std::nullopt);

/// Same, on precomputed log weights (-inf or NaN marks an invalid sample) and f values.
EstimateReport importance_estimate(std::span<const double> log_weights,
                                   std::span<const double> f_values, Normalization normalization,
                                   std::optional<H0Pair> h0 = std::nullopt);

}  // namespace gbridge
