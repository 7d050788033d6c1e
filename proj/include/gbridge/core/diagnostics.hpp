#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "gbridge/core/path.hpp"

namespace gbridge {

using JumpLyapunov = std::function<double(double, std::int64_t)>;
using GridLyapunov = std::function<double(double, const Eigen::VectorXd&)>;

/// Supremum of V(s, X_s) over s < T at the path's sample points. For jump
/// paths V is evaluated at time 0 and at both one-sided limits of every
/// jump time before T. Returns +inf if any evaluation is non-finite.
double sup_V_diagnostic(const PiecewiseConstantPath& path, const JumpLyapunov& V);

/// Grid version: V at t_0, ..., t_{N-1}. Points where V returns NaN are
/// treated as outside the diagnostic's domain and skipped; +inf propagates.
double sup_V_diagnostic(const GridPath& path, const GridLyapunov& V);

}  // namespace gbridge
