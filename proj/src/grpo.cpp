#include "gre/grpo.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "gre/kernels.hpp"

namespace gre {

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
  bool constant = false;
};

Moments population_moments(std::span<const double> xs) {
  Moments m;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  m.constant = *lo == *hi;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (m.constant) {
    m.mean = *lo;
    return m;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

}  // namespace

void Rollout::validate() const {
  if (logp_new.empty()) throw std::invalid_argument("rollout has no tokens");
  if (logp_old.size() != logp_new.size() || logp_ref.size() != logp_new.size()) {
    throw std::invalid_argument("rollout log-prob sequences differ in length");
  }
  auto ok = [](double x) { return std::isfinite(x) && x <= 0.0; };
  if (!std::all_of(logp_new.begin(), logp_new.end(), ok) ||
      !std::all_of(logp_old.begin(), logp_old.end(), ok) ||
      !std::all_of(logp_ref.begin(), logp_ref.end(), ok)) {
    throw std::invalid_argument("rollout log-probs must be finite and <= 0");
  }
  if (!std::isfinite(reward)) throw std::invalid_argument("rollout reward must be finite");
}

void RolloutGroup::validate() const {
  if (rollouts.size() < 2) {
    throw GroupTooSmall("rollout group needs at least 2 members, got " +
                        std::to_string(rollouts.size()));
  }
  for (const auto& r : rollouts) r.validate();
}

void GrpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("clip_epsilon must lie in (0, 1)");
  }
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) {
    throw std::invalid_argument("kl_beta must be finite and >= 0");
  }
  if (!(std_floor > 0.0) || !std::isfinite(std_floor)) {
    throw std::invalid_argument("std_floor must be finite and > 0");
  }
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
  if (rewards.size() < 2) {
    throw GroupTooSmall("group advantages need at least 2 rewards, got " +
                        std::to_string(rewards.size()));
  }
  if (!std::all_of(rewards.begin(), rewards.end(), [](double r) { return std::isfinite(r); })) {
    throw std::invalid_argument("rewards must be finite");
  }
  const Moments m = population_moments(rewards);
  std::vector<double> adv(rewards.size(), 0.0);
  if (m.constant) return adv;
  const double denom = m.std + std_floor;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - m.mean) / denom;
  return adv;
}

GrpoLoss grpo_loss(const RolloutGroup& group, const GrpoConfig& cfg) {
  group.validate();
  cfg.validate();

  std::vector<double> rewards;
  rewards.reserve(group.size());
  std::size_t total = 0;
  for (const auto& r : group.rollouts) {
    rewards.push_back(r.reward);
    total += r.token_count();
  }

  GrpoLoss out;
  out.advantages = group_advantages(rewards, cfg.std_floor);
  const Moments m = population_moments(rewards);
  out.reward_mean = m.mean;
  out.reward_std = m.std;
  out.token_count = total;

  // Pool every token into contiguous arrays so one kernel call covers the group.
  std::vector<double> lp_new, lp_old, lp_ref, adv, grad(total);
  lp_new.reserve(total);
  lp_old.reserve(total);
  lp_ref.reserve(total);
  adv.reserve(total);
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& r = group.rollouts[i];
    lp_new.insert(lp_new.end(), r.logp_new.begin(), r.logp_new.end());
    lp_old.insert(lp_old.end(), r.logp_old.begin(), r.logp_old.end());
    lp_ref.insert(lp_ref.end(), r.logp_ref.begin(), r.logp_ref.end());
    adv.insert(adv.end(), r.token_count(), out.advantages[i]);
  }

  const kernels::TokenTerms terms = kernels::grpo_token_terms(
      lp_new, lp_old, lp_ref, adv, cfg.clip_epsilon, cfg.kl_beta, grad);

  const double inv_t = 1.0 / static_cast<double>(total);
  out.surrogate_sum = terms.surrogate_sum;
  out.kl_sum = terms.kl_sum;
  out.loss = -(terms.surrogate_sum - cfg.kl_beta * terms.kl_sum) * inv_t;
  out.clip_fraction = static_cast<double>(terms.clipped) * inv_t;

  out.grad_logp_new.resize(group.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const std::size_t n = group.rollouts[i].token_count();
    auto& g = out.grad_logp_new[i];
    g.resize(n);
    for (std::size_t t = 0; t < n; ++t) g[t] = -grad[offset + t] * inv_t;
    offset += n;
  }
  return out;
}

}  // namespace gre
