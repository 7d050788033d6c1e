#include <cmath>

#include "gbridge/core/error.hpp"
#include "gbridge/kernels/kernels.hpp"

namespace gbridge::kernels::scalar {

double exp_sum(std::span<const double> a, double scale) {
  double s = 0.0;
  for (double v : a) s += std::exp(scale * v);
  return s;
}

void exp_scaled(std::span<const double> a, double scale, std::span<double> out) {
  if (out.size() != a.size()) throw DimensionError("exp_scaled: output size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::exp(scale * a[i]);
}

WeightedSums weighted_moments(std::span<const double> log_w, std::span<const double> f,
                              double shift) {
  if (f.size() != log_w.size()) throw DimensionError("weighted_moments: size mismatch");
  WeightedSums s;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    const double w = std::exp(log_w[i] - shift);
    const double fw = f[i] * w;
    s.sum_w += w;
    s.sum_w2 += w * w;
    s.sum_fw += fw;
    s.sum_fw2 += fw * w;
    s.sum_f2w2 += fw * fw;
    s.sum_f2w += fw * f[i];
  }
  return s;
}

void squared_distances(std::span<const double> xs, std::span<const double> ys, double px,
                       double py, std::span<double> out) {
  if (ys.size() != xs.size() || out.size() != xs.size())
    throw DimensionError("squared_distances: size mismatch");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    out[i] = dx * dx + dy * dy;
  }
}

}  // namespace gbridge::kernels::scalar
