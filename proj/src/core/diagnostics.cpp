#include "gbridge/core/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace gbridge {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double sup_V_diagnostic(const PiecewiseConstantPath& path, const JumpLyapunov& V) {
  const auto& times = path.jump_times();
  const auto& states = path.states();
  double sup = -kInf;
  auto visit = [&](double s, std::int64_t x) {
    const double v = V(s, x);
    if (!std::isfinite(v)) return false;
    if (v > sup) sup = v;
    return true;
  };
  if (!visit(0.0, states.front())) return kInf;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double s = times[k];
    if (!(s < path.horizon())) break;
    if (!visit(s, states[k]) || !visit(s, states[k + 1])) return kInf;
  }
  return sup;
}

double sup_V_diagnostic(const GridPath& path, const GridLyapunov& V) {
  const auto& t = path.times();
  const auto& x = path.values();
  double sup = -kInf;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double v = V(t[i], x[i]);
    if (std::isnan(v)) continue;
    if (!std::isfinite(v)) return kInf;
    if (v > sup) sup = v;
  }
  return sup;
}

}  // namespace gbridge
