#pragma once

// Group Relative Policy Optimization objective over chosen-token
// log-probabilities supplied by the caller.
//
// Loss convention: L = -(1/T) * sum over every token t of every rollout of
//   min(r_t * A_i, clip(r_t, 1-eps, 1+eps) * A_i) - beta * k3_t
// where r_t = exp(logp_new - logp_old), A_i is the group-normalized reward of
// the rollout owning t, and k3_t = exp(q - p) - (q - p) - 1 with p = logp_new,
// q = logp_ref. T is the pooled token count of the group.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace gre {

class GroupTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Rollout {
  std::vector<double> logp_new;  // under the policy being optimized
  std::vector<double> logp_old;  // under the snapshot that sampled the rollout
  std::vector<double> logp_ref;  // under the frozen reference policy
  double reward = 0.0;

  std::size_t token_count() const noexcept { return logp_new.size(); }
  /// Equal non-zero lengths; every log-prob finite and <= 0.
  void validate() const;
};

struct RolloutGroup {
  std::vector<Rollout> rollouts;

  std::size_t size() const noexcept { return rollouts.size(); }
  /// Throws GroupTooSmall for fewer than two rollouts, std::invalid_argument otherwise.
  void validate() const;
};

struct GrpoConfig {
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double std_floor = 1e-8;

  void validate() const;
};

/// (r_i - mean) / (population std + std_floor). A group of identical rewards
/// yields exact zeros.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor);

inline double token_ratio(double logp_new, double logp_old) noexcept {
  return std::exp(logp_new - logp_old);
}

inline double clipped_surrogate(double ratio, double adv, double epsilon) noexcept {
  const double clipped = ratio < 1.0 - epsilon ? 1.0 - epsilon
                         : ratio > 1.0 + epsilon ? 1.0 + epsilon
                                                 : ratio;
  return std::min(ratio * adv, clipped * adv);
}

/// k3 estimator of KL(pi_new || pi_ref) for one token; >= 0, zero iff equal.
inline double kl_penalty(double logp_new, double logp_ref) noexcept {
  const double d = logp_ref - logp_new;
  return std::max(std::expm1(d) - d, 0.0);
}

struct GrpoLoss {
  double loss = 0.0;
  double surrogate_sum = 0.0;
  double kl_sum = 0.0;
  double clip_fraction = 0.0;  // share of tokens whose clipped branch was the minimum
  std::size_t token_count = 0;
  std::vector<double> advantages;
  double reward_mean = 0.0;
  double reward_std = 0.0;  // population
  /// dL/dlogp_new per rollout per token.
  std::vector<std::vector<double>> grad_logp_new;
};

GrpoLoss grpo_loss(const RolloutGroup& group, const GrpoConfig& cfg);

}  // namespace gre
