#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gre/kernels.hpp"

namespace gre::kernels {

namespace {

struct KernelTable {
  Isa isa;
  void (*haversine_km)(std::span<const double>, std::span<const double>, std::span<const double>,
                       std::span<const double>, std::span<double>);
  TokenTerms (*grpo_token_terms)(std::span<const double>, std::span<const double>,
                                 std::span<const double>, std::span<const double>, double, double,
                                 std::span<double>);
  void (*log_softmax)(std::span<const double>, std::span<double>);
};

constexpr KernelTable kScalarTable{Isa::scalar, &scalar::haversine_km, &scalar::grpo_token_terms,
                                   &scalar::log_softmax};
#if defined(GRE_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{Isa::avx2, &avx2::haversine_km, &avx2::grpo_token_terms,
                                 &avx2::log_softmax};
#endif

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return &kScalarTable;
    case Isa::avx2:
#if defined(GRE_HAVE_AVX2_KERNELS)
      return &kAvx2Table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool cpu_has_avx2() noexcept {
#if defined(GRE_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_initial() noexcept {
  if (const char* forced = std::getenv("GRE_KERNELS")) {
    const std::string name(forced);
    if (name == "scalar") return &kScalarTable;
    if (name == "avx2" && isa_available(Isa::avx2)) return table_for(Isa::avx2);
  }
  if (isa_available(Isa::avx2)) return table_for(Isa::avx2);
  return &kScalarTable;
}

std::atomic<const KernelTable*>& active_table() noexcept {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

const KernelTable& table() noexcept { return *active_table().load(std::memory_order_acquire); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return table_for(Isa::avx2) != nullptr && cpu_has_avx2();
  }
  return false;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::scalar};
  if (isa_available(Isa::avx2)) out.push_back(Isa::avx2);
  return out;
}

Isa active_isa() noexcept { return table().isa; }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
  }
  active_table().store(table_for(isa), std::memory_order_release);
}

void haversine_km(std::span<const double> lat_a, std::span<const double> lon_a,
                  std::span<const double> lat_b, std::span<const double> lon_b,
                  std::span<double> out) {
  table().haversine_km(lat_a, lon_a, lat_b, lon_b, out);
}

TokenTerms grpo_token_terms(std::span<const double> logp_new, std::span<const double> logp_old,
                            std::span<const double> logp_ref, std::span<const double> adv,
                            double clip_epsilon, double kl_beta, std::span<double> grad) {
  return table().grpo_token_terms(logp_new, logp_old, logp_ref, adv, clip_epsilon, kl_beta, grad);
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  table().log_softmax(logits, out);
}

}  // namespace gre::kernels
