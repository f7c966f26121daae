#pragma once

// Four-lane double-precision elementary functions for AVX2 + FMA.
// Only include from a translation unit compiled with -mavx2 -mfma.
//
// Every approximation is a truncated Taylor series on a reduced interval;
// coefficients are generated at compile time from their exact recurrences.
// Truncation error is below 1e-17 relative on each interval.

#include <immintrin.h>

#include <array>
#include <cstddef>
#include <numbers>

namespace gre::kernels::avx2::vm {

template <std::size_t N>
constexpr std::array<double, N> inverse_factorials(std::size_t first) {
  std::array<double, N> c{};
  double f = 1.0;
  for (std::size_t k = 2; k <= first; ++k) f *= static_cast<double>(k);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t k = first + i;
    if (i > 0) f *= static_cast<double>(k);
    c[i] = 1.0 / f;
  }
  return c;
}

// sin r = sum (-1)^k r^(2k+1)/(2k+1)!, cos r = sum (-1)^k r^(2k)/(2k)!
template <std::size_t N>
constexpr std::array<double, N> sin_coeffs() {
  std::array<double, N> c{};
  double f = 1.0;  // (2k+1)!
  for (std::size_t k = 0; k < N; ++k) {
    if (k > 0) f *= static_cast<double>((2 * k) * (2 * k + 1));
    c[k] = ((k % 2) ? -1.0 : 1.0) / f;
  }
  return c;
}

template <std::size_t N>
constexpr std::array<double, N> cos_coeffs() {
  std::array<double, N> c{};
  double f = 1.0;  // (2k)!
  for (std::size_t k = 0; k < N; ++k) {
    if (k > 0) f *= static_cast<double>((2 * k - 1) * (2 * k));
    c[k] = ((k % 2) ? -1.0 : 1.0) / f;
  }
  return c;
}

// asin t = t * sum a_n t^(2n), a_0 = 1, a_n = a_{n-1} (2n-1)^2 / (2n (2n+1)).
template <std::size_t N>
constexpr std::array<double, N> asin_coeffs() {
  std::array<double, N> c{};
  c[0] = 1.0;
  for (std::size_t n = 1; n < N; ++n) {
    const double num = static_cast<double>((2 * n - 1) * (2 * n - 1));
    const double den = static_cast<double>((2 * n) * (2 * n + 1));
    c[n] = c[n - 1] * num / den;
  }
  return c;
}

inline constexpr auto kExpCoeffs = inverse_factorials<14>(0);    // |r| <= ln2/2, degree 13
inline constexpr auto kExpm1Coeffs = inverse_factorials<17>(1);  // |x| <= 1/2, x * sum
inline constexpr auto kK3Coeffs = inverse_factorials<16>(2);     // |x| <= 1/2, x^2 * sum
inline constexpr auto kSinCoeffs = sin_coeffs<9>();              // |r| <= pi/4
inline constexpr auto kCosCoeffs = cos_coeffs<10>();
inline constexpr auto kAsinCoeffs = asin_coeffs<26>();           // |t| <= 1/2

template <std::size_t N>
inline __m256d horner(__m256d x, const std::array<double, N>& c) {
  __m256d acc = _mm256_set1_pd(c[N - 1]);
  for (std::size_t i = N - 1; i-- > 0;) acc = _mm256_fmadd_pd(acc, x, _mm256_set1_pd(c[i]));
  return acc;
}

inline __m256d abs_pd(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

// 2^n for integral-valued n in [-1022, 1023].
inline __m256d exp2_int(__m256d n) {
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d exp_pd(__m256d x) {
  constexpr double kLog2e = std::numbers::log2e;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-745.2), _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-745.0)), _mm256_set1_pd(709.7));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);
  const __m256d p = horner(r, kExpCoeffs);
  // Split the scale so that subnormal results near the underflow limit stay exact-ish.
  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  const __m256d y = _mm256_mul_pd(_mm256_mul_pd(p, exp2_int(n1)), exp2_int(n2));
  return _mm256_andnot_pd(underflow, y);
}

inline __m256d expm1_pd(__m256d x) {
  const __m256d small = _mm256_cmp_pd(abs_pd(x), _mm256_set1_pd(0.5), _CMP_LE_OQ);
  const __m256d series = _mm256_mul_pd(x, horner(x, kExpm1Coeffs));
  const __m256d big = _mm256_sub_pd(exp_pd(x), _mm256_set1_pd(1.0));
  return _mm256_blendv_pd(big, series, small);
}

// exp(x) - x - 1, computed without cancellation for small |x|.
inline __m256d k3_pd(__m256d x, __m256d em1) {
  const __m256d small = _mm256_cmp_pd(abs_pd(x), _mm256_set1_pd(0.5), _CMP_LE_OQ);
  const __m256d series = _mm256_mul_pd(_mm256_mul_pd(x, x), horner(x, kK3Coeffs));
  const __m256d big = _mm256_sub_pd(em1, x);
  return _mm256_max_pd(_mm256_blendv_pd(big, series, small), _mm256_setzero_pd());
}

// sin and cos for |x| <= 4*pi (quadrant reduction with a two-part pi/2).
inline void sincos_pd(__m256d x, __m256d& s, __m256d& c) {
  constexpr double kTwoOverPi = 2.0 / std::numbers::pi;
  constexpr double kPio2Hi = 1.5707963267948965579989817342721;
  constexpr double kPio2Lo = 6.123233995736766035868820147292e-17;
  const __m256d j = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(j, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(j, _mm256_set1_pd(kPio2Lo), r);
  const __m256d r2 = _mm256_mul_pd(r, r);
  const __m256d sin_r = _mm256_mul_pd(r, horner(r2, kSinCoeffs));
  const __m256d cos_r = horner(r2, kCosCoeffs);

  const __m256i q = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(j));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
  const __m256d sin_neg = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(q, two), two));
  const __m256d cos_neg = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(q, one), two), two));
  const __m256d sign = _mm256_set1_pd(-0.0);
  s = _mm256_blendv_pd(sin_r, cos_r, swap);
  c = _mm256_blendv_pd(cos_r, sin_r, swap);
  s = _mm256_xor_pd(s, _mm256_and_pd(sin_neg, sign));
  c = _mm256_xor_pd(c, _mm256_and_pd(cos_neg, sign));
}

// asin for x in [0, 1].
inline __m256d asin_unit_pd(__m256d x) {
  constexpr double kPio2Hi = 1.5707963267948965579989817342721;
  constexpr double kPio2Lo = 6.123233995736766035868820147292e-17;
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d big = _mm256_cmp_pd(x, half, _CMP_GT_OQ);
  // asin x = pi/2 - 2 asin(sqrt((1 - x)/2)) keeps the series argument <= 1/2.
  const __m256d folded = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_sub_pd(_mm256_set1_pd(1.0), x), half));
  const __m256d t = _mm256_blendv_pd(x, folded, big);
  const __m256d p = _mm256_mul_pd(t, horner(_mm256_mul_pd(t, t), kAsinCoeffs));
  const __m256d reflected = _mm256_add_pd(
      _mm256_fnmadd_pd(_mm256_set1_pd(2.0), p, _mm256_set1_pd(kPio2Hi)), _mm256_set1_pd(kPio2Lo));
  return _mm256_blendv_pd(p, reflected, big);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace gre::kernels::avx2::vm
