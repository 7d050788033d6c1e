#include <atomic>
#include <stdexcept>

#include "gbridge/kernels/kernels.hpp"

namespace gbridge::kernels {

namespace {

Backend detect() noexcept { return avx2_supported() ? Backend::Avx2 : Backend::Scalar; }

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_supported() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_supported())
    throw std::invalid_argument("AVX2 kernels requested but the CPU does not support AVX2/FMA");
  current().store(b, std::memory_order_relaxed);
}

double exp_sum(std::span<const double> a, double scale) {
  return active_backend() == Backend::Avx2 ? avx2::exp_sum(a, scale) : scalar::exp_sum(a, scale);
}

void exp_scaled(std::span<const double> a, double scale, std::span<double> out) {
  if (active_backend() == Backend::Avx2)
    avx2::exp_scaled(a, scale, out);
  else
    scalar::exp_scaled(a, scale, out);
}

WeightedSums weighted_moments(std::span<const double> log_w, std::span<const double> f,
                              double shift) {
  return active_backend() == Backend::Avx2 ? avx2::weighted_moments(log_w, f, shift)
                                           : scalar::weighted_moments(log_w, f, shift);
}

void squared_distances(std::span<const double> xs, std::span<const double> ys, double px,
                       double py, std::span<double> out) {
  if (active_backend() == Backend::Avx2)
    avx2::squared_distances(xs, ys, px, py, out);
  else
    scalar::squared_distances(xs, ys, px, py, out);
}

}  // namespace gbridge::kernels
