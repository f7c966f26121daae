// Scalar reference kernels. These use libm directly and define the numbers
// every other variant is tested against.

#include <algorithm>
#include <cmath>
#include <limits>

#include "check.hpp"
#include "gre/geodesy.hpp"
#include "gre/kernels.hpp"

namespace gre::kernels::scalar {

void haversine_km(std::span<const double> lat_a, std::span<const double> lon_a,
                  std::span<const double> lat_b, std::span<const double> lon_b,
                  std::span<double> out) {
  detail::check_haversine(lat_a, lon_a, lat_b, lon_b, out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = geodesic_distance_km(GeoCoordinate(lat_a[i], lon_a[i]),
                                  GeoCoordinate(lat_b[i], lon_b[i]));
  }
}

TokenTerms grpo_token_terms(std::span<const double> logp_new, std::span<const double> logp_old,
                            std::span<const double> logp_ref, std::span<const double> adv,
                            double clip_epsilon, double kl_beta, std::span<double> grad) {
  detail::check_grpo(logp_new, logp_old, logp_ref, adv, grad);
  const double lo = 1.0 - clip_epsilon;
  const double hi = 1.0 + clip_epsilon;
  TokenTerms terms;
  for (std::size_t t = 0; t < logp_new.size(); ++t) {
    const double ratio = std::exp(logp_new[t] - logp_old[t]);
    const double unclipped = ratio * adv[t];
    const double clipped = std::clamp(ratio, lo, hi) * adv[t];
    const bool clip_active = clipped < unclipped;
    terms.surrogate_sum += clip_active ? clipped : unclipped;
    terms.clipped += clip_active ? 1 : 0;

    // k3 = exp(d) - d - 1 with d = ref - new; expm1 keeps it >= 0 for tiny d.
    const double d = logp_ref[t] - logp_new[t];
    const double em1 = std::expm1(d);
    terms.kl_sum += std::max(em1 - d, 0.0);

    if (!grad.empty()) {
      // d/dlogp_new of clip(r)*A is zero; d k3/dlogp_new = 1 - exp(d) = -expm1(d).
      grad[t] = (clip_active ? 0.0 : unclipped) + kl_beta * em1;
    }
  }
  return terms;
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  detail::require_same_size(logits.size(), out.size(), "log_softmax: output length mismatch");
  if (logits.empty()) return;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double shift = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - shift;
}

}  // namespace gre::kernels::scalar
