#pragma once

// Data-parallel inner loops shared by the backends. Each kernel has a scalar
// reference implementation and an AVX2 variant; the public entry points
// dispatch at runtime on CPU support. Scalar and AVX2 results agree to a few
// ulp (different summation order and exp polynomial), which the equivalence
// tests pin down.

#include <span>
#include <string_view>

namespace gbridge::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b) noexcept;
bool avx2_supported() noexcept;
/// Backend used by the dispatching entry points. Defaults to the best one
/// the CPU supports.
Backend active_backend() noexcept;
/// Force a backend; throws std::invalid_argument if the CPU lacks it.
void set_backend(Backend b);

struct WeightedSums {
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double sum_fw = 0.0;
  double sum_fw2 = 0.0;   // sum f w^2
  double sum_f2w2 = 0.0;  // sum f^2 w^2
  double sum_f2w = 0.0;   // sum f^2 w
};

/// sum_i exp(scale * a_i).
double exp_sum(std::span<const double> a, double scale);
/// out_i = exp(scale * a_i).
void exp_scaled(std::span<const double> a, double scale, std::span<double> out);
/// Moments of w_i = exp(log_w_i - shift) against f_i; log_w_i = -inf gives w_i = 0.
WeightedSums weighted_moments(std::span<const double> log_w, std::span<const double> f,
                              double shift);
/// out_i = (xs_i - px)^2 + (ys_i - py)^2.
void squared_distances(std::span<const double> xs, std::span<const double> ys, double px,
                       double py, std::span<double> out);

namespace scalar {
double exp_sum(std::span<const double> a, double scale);
void exp_scaled(std::span<const double> a, double scale, std::span<double> out);
WeightedSums weighted_moments(std::span<const double> log_w, std::span<const double> f,
                              double shift);
void squared_distances(std::span<const double> xs, std::span<const double> ys, double px,
                       double py, std::span<double> out);
}  // namespace scalar

namespace avx2 {
double exp_sum(std::span<const double> a, double scale);
void exp_scaled(std::span<const double> a, double scale, std::span<double> out);
WeightedSums weighted_moments(std::span<const double> log_w, std::span<const double> f,
                              double shift);
void squared_distances(std::span<const double> xs, std::span<const double> ys, double px,
                       double py, std::span<double> out);
}  // namespace avx2

}  // namespace gbridge::kernels
