#include <array>
#include <cmath>

#include "gbridge/core/error.hpp"
#include "gbridge/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define GBRIDGE_X86 1
#define GBRIDGE_AVX2 __attribute__((target("avx2,fma")))
#else
#define GBRIDGE_X86 0
#endif

namespace gbridge::kernels::avx2 {

#if GBRIDGE_X86

namespace {

// exp for 4 doubles: Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2, then
// the Cephes rational approximation exp(r) = 1 + 2 r P(r^2) / (Q(r^2) - r P(r^2)).
// Inputs below -708.3 (including -inf) return 0; above 709.7 return +inf; NaN propagates.
GBRIDGE_AVX2 inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d lo_lim = _mm256_set1_pd(-708.3);
  const __m256d hi_lim = _mm256_set1_pd(709.7);

  const __m256d underflow = _mm256_cmp_pd(x, lo_lim, _CMP_LT_OQ);
  const __m256d overflow = _mm256_cmp_pd(x, hi_lim, _CMP_GT_OQ);
  const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_lim), hi_lim);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, xc);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  const __m256d r2 = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.00000000000000000009e0));
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, one);

  // Scale by 2^n through the exponent field.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
  e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL), overflow);
  e = _mm256_blendv_pd(e, x, nan_mask);
  return e;
}

GBRIDGE_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Loads the tail [i, n) of `src` padded with `pad`.
inline std::array<double, 4> tail(std::span<const double> src, std::size_t i, double pad) {
  std::array<double, 4> buf{pad, pad, pad, pad};
  for (std::size_t k = 0; i + k < src.size(); ++k) buf[k] = src[i + k];
  return buf;
}

}  // namespace

GBRIDGE_AVX2 double exp_sum(std::span<const double> a, double scale) {
  const std::size_t n = a.size();
  const __m256d s = _mm256_set1_pd(scale);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, exp4(_mm256_mul_pd(s, _mm256_loadu_pd(a.data() + i))));
  if (i < n) {
    const auto buf = tail(a, i, 0.0);
    const __m256d v = exp4(_mm256_mul_pd(s, _mm256_loadu_pd(buf.data())));
    const std::size_t rem = n - i;
    const __m256i idx = _mm256_set_epi64x(3, 2, 1, 0);
    const __m256d keep =
        _mm256_castsi256_pd(_mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(rem)), idx));
    acc = _mm256_add_pd(acc, _mm256_and_pd(v, keep));
  }
  return hsum(acc);
}

GBRIDGE_AVX2 void exp_scaled(std::span<const double> a, double scale, std::span<double> out) {
  if (out.size() != a.size()) throw DimensionError("exp_scaled: output size mismatch");
  const std::size_t n = a.size();
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out.data() + i, exp4(_mm256_mul_pd(s, _mm256_loadu_pd(a.data() + i))));
  if (i < n) {
    const auto buf = tail(a, i, 0.0);
    std::array<double, 4> res{};
    _mm256_storeu_pd(res.data(), exp4(_mm256_mul_pd(s, _mm256_loadu_pd(buf.data()))));
    for (std::size_t k = 0; i + k < n; ++k) out[i + k] = res[k];
  }
}

GBRIDGE_AVX2 WeightedSums weighted_moments(std::span<const double> log_w,
                                           std::span<const double> f, double shift) {
  if (f.size() != log_w.size()) throw DimensionError("weighted_moments: size mismatch");
  const std::size_t n = log_w.size();
  const __m256d sh = _mm256_set1_pd(shift);
  __m256d sw = _mm256_setzero_pd(), sw2 = sw, sfw = sw, sfw2 = sw, sf2w2 = sw, sf2w = sw;
  auto accumulate = [&](__m256d lw, __m256d fv) GBRIDGE_AVX2 {
    const __m256d w = exp4(_mm256_sub_pd(lw, sh));
    const __m256d fw = _mm256_mul_pd(fv, w);
    sw = _mm256_add_pd(sw, w);
    sw2 = _mm256_fmadd_pd(w, w, sw2);
    sfw = _mm256_add_pd(sfw, fw);
    sfw2 = _mm256_fmadd_pd(fw, w, sfw2);
    sf2w2 = _mm256_fmadd_pd(fw, fw, sf2w2);
    sf2w = _mm256_fmadd_pd(fw, fv, sf2w);
  };
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    accumulate(_mm256_loadu_pd(log_w.data() + i), _mm256_loadu_pd(f.data() + i));
  if (i < n) {
    const auto lw = tail(log_w, i, -HUGE_VAL);
    const auto fv = tail(f, i, 0.0);
    accumulate(_mm256_loadu_pd(lw.data()), _mm256_loadu_pd(fv.data()));
  }
  return {hsum(sw), hsum(sw2), hsum(sfw), hsum(sfw2), hsum(sf2w2), hsum(sf2w)};
}

GBRIDGE_AVX2 void squared_distances(std::span<const double> xs, std::span<const double> ys,
                                    double px, double py, std::span<double> out) {
  if (ys.size() != xs.size() || out.size() != xs.size())
    throw DimensionError("squared_distances: size mismatch");
  const std::size_t n = xs.size();
  const __m256d vx = _mm256_set1_pd(px);
  const __m256d vy = _mm256_set1_pd(py);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + i), vx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), vy);
    _mm256_storeu_pd(out.data() + i, _mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy)));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    out[i] = std::fma(dx, dx, dy * dy);
  }
}

#else  // no x86: the dispatcher never selects these.

double exp_sum(std::span<const double> a, double scale) { return scalar::exp_sum(a, scale); }
void exp_scaled(std::span<const double> a, double scale, std::span<double> out) {
  scalar::exp_scaled(a, scale, out);
}
WeightedSums weighted_moments(std::span<const double> log_w, std::span<const double> f,
                              double shift) {
  return scalar::weighted_moments(log_w, f, shift);
}
void squared_distances(std::span<const double> xs, std::span<const double> ys, double px,
                       double py, std::span<double> out) {
  scalar::squared_distances(xs, ys, px, py, out);
}

#endif

}  // namespace gbridge::kernels::avx2
