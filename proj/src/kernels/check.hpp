#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace gre::kernels::detail {

inline void require_same_size(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) throw std::invalid_argument(what);
}

inline void check_haversine(std::span<const double> lat_a, std::span<const double> lon_a,
                            std::span<const double> lat_b, std::span<const double> lon_b,
                            std::span<double> out) {
  const std::size_t n = out.size();
  require_same_size(n, lat_a.size(), "haversine_km: lat_a length mismatch");
  require_same_size(n, lon_a.size(), "haversine_km: lon_a length mismatch");
  require_same_size(n, lat_b.size(), "haversine_km: lat_b length mismatch");
  require_same_size(n, lon_b.size(), "haversine_km: lon_b length mismatch");
}

inline void check_grpo(std::span<const double> logp_new, std::span<const double> logp_old,
                       std::span<const double> logp_ref, std::span<const double> adv,
                       std::span<double> grad) {
  const std::size_t n = logp_new.size();
  require_same_size(n, logp_old.size(), "grpo_token_terms: logp_old length mismatch");
  require_same_size(n, logp_ref.size(), "grpo_token_terms: logp_ref length mismatch");
  require_same_size(n, adv.size(), "grpo_token_terms: adv length mismatch");
  if (!grad.empty()) require_same_size(n, grad.size(), "grpo_token_terms: grad length mismatch");
}

}  // namespace gre::kernels::detail
