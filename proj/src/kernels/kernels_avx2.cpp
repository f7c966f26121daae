// AVX2/FMA kernels. Built with -mavx2 -mfma; only reached through dispatch
// after a CPU feature check.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "check.hpp"
#include "gre/geodesy.hpp"
#include "gre/kernels.hpp"
#include "vecmath_avx2.hpp"

namespace gre::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

// Loads up to four lanes, filling the rest with `fill`.
inline __m256d load_partial(const double* p, std::size_t count, double fill) {
  std::array<double, kLanes> buf;
  buf.fill(fill);
  std::copy_n(p, count, buf.begin());
  return _mm256_loadu_pd(buf.data());
}

inline void store_partial(double* p, std::size_t count, __m256d v) {
  std::array<double, kLanes> buf;
  _mm256_storeu_pd(buf.data(), v);
  std::copy_n(buf.begin(), count, p);
}

inline __m256d haversine_lanes(__m256d lat1, __m256d lon1, __m256d lat2, __m256d lon2) {
  const __m256d half_rad = _mm256_set1_pd(0.5 * std::numbers::pi / 180.0);
  const __m256d rad = _mm256_set1_pd(std::numbers::pi / 180.0);

  __m256d dlon = _mm256_sub_pd(lon2, lon1);
  const __m256d wrap_down = _mm256_cmp_pd(dlon, _mm256_set1_pd(180.0), _CMP_GT_OQ);
  const __m256d wrap_up = _mm256_cmp_pd(dlon, _mm256_set1_pd(-180.0), _CMP_LT_OQ);
  dlon = _mm256_sub_pd(dlon, _mm256_and_pd(wrap_down, _mm256_set1_pd(360.0)));
  dlon = _mm256_add_pd(dlon, _mm256_and_pd(wrap_up, _mm256_set1_pd(360.0)));
  const __m256d dlat = _mm256_sub_pd(lat2, lat1);

  __m256d s_lat, c_unused, s_lon, cos1, cos2, s_unused;
  vm::sincos_pd(_mm256_mul_pd(dlat, half_rad), s_lat, c_unused);
  vm::sincos_pd(_mm256_mul_pd(dlon, half_rad), s_lon, c_unused);
  vm::sincos_pd(_mm256_mul_pd(lat1, rad), s_unused, cos1);
  vm::sincos_pd(_mm256_mul_pd(lat2, rad), s_unused, cos2);

  const __m256d cos_prod = _mm256_mul_pd(cos1, cos2);
  __m256d h = _mm256_fmadd_pd(cos_prod, _mm256_mul_pd(s_lon, s_lon), _mm256_mul_pd(s_lat, s_lat));
  h = _mm256_min_pd(_mm256_max_pd(h, _mm256_setzero_pd()), _mm256_set1_pd(1.0));
  const __m256d angle = _mm256_mul_pd(_mm256_set1_pd(2.0), vm::asin_unit_pd(_mm256_sqrt_pd(h)));
  return _mm256_mul_pd(angle, _mm256_set1_pd(kEarthRadiusKm));
}

struct GrpoLanes {
  __m256d surrogate;
  __m256d kl;
  __m256d clip_mask;
  __m256d grad;
};

inline GrpoLanes grpo_lanes(__m256d lp_new, __m256d lp_old, __m256d lp_ref, __m256d adv,
                            __m256d lo, __m256d hi, __m256d beta) {
  const __m256d ratio = vm::exp_pd(_mm256_sub_pd(lp_new, lp_old));
  const __m256d unclipped = _mm256_mul_pd(ratio, adv);
  const __m256d clipped = _mm256_mul_pd(_mm256_min_pd(_mm256_max_pd(ratio, lo), hi), adv);
  const __m256d active = _mm256_cmp_pd(clipped, unclipped, _CMP_LT_OQ);
  const __m256d d = _mm256_sub_pd(lp_ref, lp_new);
  const __m256d em1 = vm::expm1_pd(d);
  GrpoLanes out;
  out.surrogate = _mm256_blendv_pd(unclipped, clipped, active);
  out.kl = vm::k3_pd(d, em1);
  out.clip_mask = active;
  out.grad = _mm256_fmadd_pd(beta, em1, _mm256_andnot_pd(active, unclipped));
  return out;
}

}  // namespace

void haversine_km(std::span<const double> lat_a, std::span<const double> lon_a,
                  std::span<const double> lat_b, std::span<const double> lon_b,
                  std::span<double> out) {
  detail::check_haversine(lat_a, lon_a, lat_b, lon_b, out);
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = haversine_lanes(_mm256_loadu_pd(&lat_a[i]), _mm256_loadu_pd(&lon_a[i]),
                                      _mm256_loadu_pd(&lat_b[i]), _mm256_loadu_pd(&lon_b[i]));
    _mm256_storeu_pd(&out[i], d);
  }
  if (i < n) {
    const std::size_t rem = n - i;
    const __m256d d = haversine_lanes(load_partial(&lat_a[i], rem, 0.0),
                                      load_partial(&lon_a[i], rem, 0.0),
                                      load_partial(&lat_b[i], rem, 0.0),
                                      load_partial(&lon_b[i], rem, 0.0));
    store_partial(&out[i], rem, d);
  }
}

TokenTerms grpo_token_terms(std::span<const double> logp_new, std::span<const double> logp_old,
                            std::span<const double> logp_ref, std::span<const double> adv,
                            double clip_epsilon, double kl_beta, std::span<double> grad) {
  detail::check_grpo(logp_new, logp_old, logp_ref, adv, grad);
  const std::size_t n = logp_new.size();
  const __m256d lo = _mm256_set1_pd(1.0 - clip_epsilon);
  const __m256d hi = _mm256_set1_pd(1.0 + clip_epsilon);
  const __m256d beta = _mm256_set1_pd(kl_beta);
  const bool want_grad = !grad.empty();

  __m256d surrogate = _mm256_setzero_pd();
  __m256d kl = _mm256_setzero_pd();
  std::size_t clipped = 0;

  std::size_t t = 0;
  for (; t + kLanes <= n; t += kLanes) {
    const GrpoLanes g = grpo_lanes(_mm256_loadu_pd(&logp_new[t]), _mm256_loadu_pd(&logp_old[t]),
                                   _mm256_loadu_pd(&logp_ref[t]), _mm256_loadu_pd(&adv[t]), lo,
                                   hi, beta);
    surrogate = _mm256_add_pd(surrogate, g.surrogate);
    kl = _mm256_add_pd(kl, g.kl);
    clipped += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(g.clip_mask)));
    if (want_grad) _mm256_storeu_pd(&grad[t], g.grad);
  }
  if (t < n) {
    // Zero padding gives ratio 1, advantage 0 and k3 0: padded lanes contribute nothing.
    const std::size_t rem = n - t;
    const GrpoLanes g = grpo_lanes(load_partial(&logp_new[t], rem, 0.0),
                                   load_partial(&logp_old[t], rem, 0.0),
                                   load_partial(&logp_ref[t], rem, 0.0),
                                   load_partial(&adv[t], rem, 0.0), lo, hi, beta);
    surrogate = _mm256_add_pd(surrogate, g.surrogate);
    kl = _mm256_add_pd(kl, g.kl);
    clipped += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(g.clip_mask)));
    if (want_grad) store_partial(&grad[t], rem, g.grad);
  }

  TokenTerms terms;
  terms.surrogate_sum = vm::hsum(surrogate);
  terms.kl_sum = vm::hsum(kl);
  terms.clipped = clipped;
  return terms;
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  detail::require_same_size(logits.size(), out.size(), "log_softmax: output length mismatch");
  const std::size_t n = logits.size();
  if (n == 0) return;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  __m256d vmax = _mm256_set1_pd(kNegInf);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(&logits[i]));
  if (i < n) vmax = _mm256_max_pd(vmax, load_partial(&logits[i], n - i, kNegInf));
  const double m = vm::hmax(vmax);
  const __m256d vm_ = _mm256_set1_pd(m);

  __m256d vsum = _mm256_setzero_pd();
  for (i = 0; i + kLanes <= n; i += kLanes) {
    vsum = _mm256_add_pd(vsum, vm::exp_pd(_mm256_sub_pd(_mm256_loadu_pd(&logits[i]), vm_)));
  }
  if (i < n) {
    vsum = _mm256_add_pd(
        vsum, vm::exp_pd(_mm256_sub_pd(load_partial(&logits[i], n - i, kNegInf), vm_)));
  }
  const __m256d shift = _mm256_set1_pd(m + std::log(vm::hsum(vsum)));

  for (i = 0; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(&out[i], _mm256_sub_pd(_mm256_loadu_pd(&logits[i]), shift));
  }
  if (i < n) store_partial(&out[i], n - i, _mm256_sub_pd(load_partial(&logits[i], n - i, 0.0), shift));
}

}  // namespace gre::kernels::avx2
