#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference variant and,
// on x86-64 builds, an AVX2/FMA variant. The entry points in gre::kernels
// dispatch once per process to the best variant the CPU supports; the
// GRE_KERNELS environment variable ("scalar" or "avx2") overrides the choice.
//
// Variants agree to within a few ulp but not bit-for-bit (different
// polynomial approximations and reduction order). Within one process the
// choice is fixed, so results are reproducible run to run.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gre::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Throws std::invalid_argument if the ISA is not available on this CPU/build.
void set_active_isa(Isa isa);
std::vector<Isa> available_isas();

/// Sums over the tokens of one GRPO batch.
struct TokenTerms {
  double surrogate_sum = 0.0;  // sum of min(r*A, clip(r)*A)
  double kl_sum = 0.0;         // sum of k3 estimates
  std::size_t clipped = 0;     // tokens where the clipped branch is strictly the minimum
};

/// out[i] = haversine distance in km between (lat_a[i], lon_a[i]) and (lat_b[i], lon_b[i]),
/// inputs in degrees. All spans must have equal length.
void haversine_km(std::span<const double> lat_a, std::span<const double> lon_a,
                  std::span<const double> lat_b, std::span<const double> lon_b,
                  std::span<double> out);

/// Per-token GRPO terms. When grad is non-empty it receives the derivative of
/// each token's objective  min(r*A, clip(r)*A) - beta*k3  with respect to
/// logp_new (the loss gradient is its negation divided by the token count).
TokenTerms grpo_token_terms(std::span<const double> logp_new, std::span<const double> logp_old,
                            std::span<const double> logp_ref, std::span<const double> adv,
                            double clip_epsilon, double kl_beta, std::span<double> grad);

/// out = logits - logsumexp(logits). out may alias logits.
void log_softmax(std::span<const double> logits, std::span<double> out);

namespace scalar {
void haversine_km(std::span<const double> lat_a, std::span<const double> lon_a,
                  std::span<const double> lat_b, std::span<const double> lon_b,
                  std::span<double> out);
TokenTerms grpo_token_terms(std::span<const double> logp_new, std::span<const double> logp_old,
                            std::span<const double> logp_ref, std::span<const double> adv,
                            double clip_epsilon, double kl_beta, std::span<double> grad);
void log_softmax(std::span<const double> logits, std::span<double> out);
}  // namespace scalar

#if defined(GRE_HAVE_AVX2_KERNELS)
namespace avx2 {
void haversine_km(std::span<const double> lat_a, std::span<const double> lon_a,
                  std::span<const double> lat_b, std::span<const double> lon_b,
                  std::span<double> out);
TokenTerms grpo_token_terms(std::span<const double> logp_new, std::span<const double> logp_old,
                            std::span<const double> logp_ref, std::span<const double> adv,
                            double clip_epsilon, double kl_beta, std::span<double> grad);
void log_softmax(std::span<const double> logits, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace gre::kernels
