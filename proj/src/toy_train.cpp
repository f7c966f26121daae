#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gre/kernels.hpp"
#include "gre/toy.hpp"

namespace gre::toy {

namespace {

struct SampledSequence {
  std::vector<std::size_t> tokens;
  std::vector<double> logp;
};

SampledSequence sample_sequence(const ToyPolicy& policy, std::span<const double> prompt,
                                Rng& rng) {
  SampledSequence s;
  s.tokens.reserve(policy.max_len());
  s.logp.reserve(policy.max_len());
  for (std::size_t pos = 0; pos < policy.max_len(); ++pos) {
    const std::vector<double> lp = policy.log_probs(prompt, pos);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t chosen = lp.size();
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      const double p = std::exp(lp[k]);
      if (p > 0.0) last_positive = k;
      cumulative += p;
      if (u < cumulative) {
        chosen = k;
        break;
      }
    }
    if (chosen == lp.size()) chosen = last_positive;  // rounding left u above the total
    s.tokens.push_back(chosen);
    s.logp.push_back(std::max(lp[chosen], -700.0));
  }
  return s;
}

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stderr_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

}  // namespace

SampledGroup sample_rollouts(const ToyPolicy& policy, std::span<const double> prompt,
                             std::size_t group_size, Rng& rng, const ToyPolicy* reference) {
  if (group_size < 2) {
    throw GroupTooSmall("sample_rollouts needs a group of at least 2");
  }
  SampledGroup out;
  out.tokens.reserve(group_size);
  out.texts.reserve(group_size);
  out.group.rollouts.reserve(group_size);
  for (std::size_t i = 0; i < group_size; ++i) {
    SampledSequence s = sample_sequence(policy, prompt, rng);
    Rollout r;
    r.logp_old = s.logp;
    r.logp_ref = reference != nullptr ? reference->sequence_log_probs(prompt, s.tokens) : s.logp;
    r.logp_new = std::move(s.logp);
    out.texts.push_back(policy.vocab().render(s.tokens));
    out.tokens.push_back(std::move(s.tokens));
    out.group.rollouts.push_back(std::move(r));
  }
  return out;
}

SampledGroup sample_rollouts(const ToyPolicy& policy, std::span<const double> prompt,
                             std::size_t group_size, std::uint64_t seed,
                             const ToyPolicy* reference) {
  Rng rng(seed);
  return sample_rollouts(policy, prompt, group_size, rng, reference);
}

PolicyGradient policy_loss_and_gradient(const ToyPolicy& policy, const FrozenGroup& frozen,
                                        const GrpoConfig& cfg) {
  const std::size_t g = frozen.tokens.size();
  if (frozen.logp_old.size() != g || frozen.logp_ref.size() != g || frozen.rewards.size() != g) {
    throw std::invalid_argument("frozen group fields differ in length");
  }
  RolloutGroup group;
  group.rollouts.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    auto& r = group.rollouts[i];
    r.logp_new = policy.sequence_log_probs(frozen.prompt, frozen.tokens[i]);
    r.logp_old = frozen.logp_old[i];
    r.logp_ref = frozen.logp_ref[i];
    r.reward = frozen.rewards[i];
  }

  PolicyGradient out;
  out.loss = grpo_loss(group, cfg);
  out.grad.assign(policy.params().size(), 0.0);

  const std::size_t v = policy.vocab_size();
  const std::size_t pdim = policy.prompt_dim();
  std::size_t max_len = 0;
  for (const auto& seq : frozen.tokens) max_len = std::max(max_len, seq.size());

  // The prompt is shared by the group, so softmax rows depend only on the
  // position: accumulate per-position logit gradients, then expand over features.
  std::vector<double> dlogits(v);
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    const std::vector<double> lp = policy.log_probs(frozen.prompt, pos);
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      if (pos >= frozen.tokens[i].size()) continue;
      const double gi = out.loss.grad_logp_new[i][pos];
      dlogits[frozen.tokens[i][pos]] += gi;
      weight_sum += gi;
    }
    // d logp_y / d z_k = [k == y] - p_k
    for (std::size_t k = 0; k < v; ++k) dlogits[k] -= weight_sum * std::exp(lp[k]);

    double* pos_row = &out.grad[(pdim + pos) * v];
    for (std::size_t k = 0; k < v; ++k) pos_row[k] += dlogits[k];
    for (std::size_t f = 0; f < pdim; ++f) {
      const double xf = frozen.prompt[f];
      if (xf == 0.0) continue;
      double* row = &out.grad[f * v];
      for (std::size_t k = 0; k < v; ++k) row[k] += xf * dlogits[k];
    }
  }
  return out;
}

TrainResult train_stage(const ToyEnvironment& env, const ToyPolicy& initial,
                        const GrpoConfig& grpo_cfg, const RewardConfig& reward_cfg,
                        const TrainOptions& opts) {
  env.validate();
  grpo_cfg.validate();
  reward_cfg.validate();
  if (opts.group_size < 2) throw GroupTooSmall("group_size must be at least 2");
  if (opts.prompts_per_step == 0 || opts.updates_per_batch == 0) {
    throw std::invalid_argument("prompts_per_step and updates_per_batch must be positive");
  }
  if (!std::isfinite(opts.lr) || opts.lr < 0.0) throw std::invalid_argument("lr must be >= 0");
  if (initial.prompt_dim() != env.prompt_dim() || initial.vocab().text != env.vocab.text) {
    throw std::invalid_argument("policy does not match the environment");
  }

  TrainResult result{initial, {}};
  ToyPolicy& policy = result.policy;
  const ToyPolicy& reference = initial;
  Rng rng(opts.seed);
  result.curve.reserve(opts.steps);

  std::vector<FrozenGroup> batch(opts.prompts_per_step);
  std::vector<double> rewards, formats, accuracies;
  for (std::size_t step = 0; step < opts.steps; ++step) {
    rewards.clear();
    formats.clear();
    accuracies.clear();
    for (auto& frozen : batch) {
      const std::size_t inst = static_cast<std::size_t>(rng.below(env.instances.size()));
      frozen.prompt = env.instances[inst].features;
      SampledGroup sampled = sample_rollouts(policy, frozen.prompt, opts.group_size, rng, &reference);
      frozen.tokens = std::move(sampled.tokens);
      frozen.logp_old.clear();
      frozen.logp_ref.clear();
      frozen.rewards.clear();
      for (std::size_t i = 0; i < opts.group_size; ++i) {
        auto& r = sampled.group.rollouts[i];
        for (double lp : r.logp_old) {
          if (!std::isfinite(lp)) {
            throw TrainingDiverged("log-probabilities became non-finite at step " + std::to_string(step));
          }
        }
        const RewardBreakdown rb = env.reward(inst, sampled.texts[i], reward_cfg);
        frozen.logp_old.push_back(std::move(r.logp_old));
        frozen.logp_ref.push_back(std::move(r.logp_ref));
        frozen.rewards.push_back(rb.total);
        rewards.push_back(rb.total);
        formats.push_back(rb.format);
        accuracies.push_back(rb.accuracy);
      }
    }

    StepStats stats;
    stats.step = step;
    stats.mean_reward = mean_of(rewards);
    stats.mean_format = mean_of(formats);
    stats.mean_accuracy = mean_of(accuracies);

    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> grad(policy.params().size());
    for (std::size_t u = 0; u < opts.updates_per_batch; ++u) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0, kl = 0.0, clip = 0.0;
      for (const auto& frozen : batch) {
        const PolicyGradient pg = policy_loss_and_gradient(policy, frozen, grpo_cfg);
        loss += pg.loss.loss * scale;
        kl += pg.loss.kl_sum / static_cast<double>(pg.loss.token_count) * scale;
        clip += pg.loss.clip_fraction * scale;
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += pg.grad[k] * scale;
      }
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("loss became non-finite at step " + std::to_string(step));
      }
      if (u == 0) {
        stats.loss = loss;
        stats.kl_mean = kl;
        stats.clip_fraction = clip;
      }
      auto params = policy.params();
      for (std::size_t k = 0; k < params.size(); ++k) params[k] -= opts.lr * grad[k];
      if (!policy.finite()) {
        throw TrainingDiverged("policy weights became non-finite at step " + std::to_string(step));
      }
    }
    result.curve.push_back(stats);
  }
  return result;
}

PolicyEvaluation evaluate_policy(const ToyEnvironment& env, const ToyPolicy& policy,
                                 std::size_t n_samples, std::uint64_t seed,
                                 const RewardConfig& reward_cfg) {
  if (env.instances.empty()) throw std::invalid_argument("no instances");
  if (n_samples == 0) throw std::invalid_argument("n_samples must be positive");
  Rng rng(seed);
  std::vector<double> rewards, accuracies, formats, distances;
  std::size_t unparsed = 0;
  rewards.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t inst = s % env.instances.size();
    const auto& prompt = env.instances[inst].features;
    const SampledSequence seq = sample_sequence(policy, prompt, rng);
    const std::string text = policy.vocab().render(seq.tokens);
    const RewardBreakdown rb = env.reward(inst, text, reward_cfg);
    rewards.push_back(rb.total);
    accuracies.push_back(rb.accuracy);
    formats.push_back(rb.format);
    if (env.kind == EnvKind::geo_grid) {
      const TaggedResponse tagged = extract_tags(text);
      const auto pred = tagged.answer_span ? parse_coordinate(*tagged.answer_span) : std::nullopt;
      if (pred) {
        distances.push_back(
            geodesic_distance_km(*pred, std::get<GeoCoordinate>(env.instances[inst].truth)));
      } else {
        ++unparsed;
      }
    }
  }
  PolicyEvaluation e;
  e.n = n_samples;
  e.mean_reward = mean_of(rewards);
  e.reward_stderr = stderr_of(rewards);
  e.mean_accuracy = mean_of(accuracies);
  e.accuracy_stderr = stderr_of(accuracies);
  e.mean_format = mean_of(formats);
  if (env.kind == EnvKind::geo_grid) {
    e.thresholds = threshold_metrics_from_distances(distances, unparsed, default_thresholds_km());
  }
  return e;
}

std::size_t modal_answer(const ToyPolicy& policy, const ToyEnvironment& env, std::size_t instance) {
  if (policy.max_len() <= kAnswerPosition) {
    throw std::invalid_argument("policy too short to have an answer position");
  }
  const std::vector<double> lp = policy.log_probs(env.instances.at(instance).features, kAnswerPosition);
  return static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
}

nlohmann::json to_json(const RunManifest& m) {
  return {
      {"seed", m.seed},
      {"stage", std::string(to_string(m.stage))},
      {"grpo", {{"clip_epsilon", m.grpo.clip_epsilon},
                {"kl_beta", m.grpo.kl_beta},
                {"std_floor", m.grpo.std_floor}}},
      {"reward", {{"theta_km", m.reward.theta_km},
                  {"accuracy_weight", m.reward.accuracy_weight},
                  {"format_weight", m.reward.format_weight}}},
      {"lr", m.options.lr},
      {"steps", m.options.steps},
      {"group_size", m.options.group_size},
      {"prompts_per_step", m.options.prompts_per_step},
      {"updates_per_batch", m.options.updates_per_batch},
      {"environment", m.environment},
      {"kernel_isa", m.kernel_isa},
      {"tool_version", m.tool_version},
  };
}

nlohmann::json to_json(const StepStats& s) {
  return {{"step", s.step},           {"mean_reward", s.mean_reward},
          {"mean_format", s.mean_format}, {"mean_accuracy", s.mean_accuracy},
          {"loss", s.loss},           {"kl_mean", s.kl_mean},
          {"clip_fraction", s.clip_fraction}};
}

nlohmann::json to_json(const PolicyEvaluation& e) {
  nlohmann::json j = {{"n", e.n},
                      {"mean_reward", e.mean_reward},
                      {"reward_stderr", e.reward_stderr},
                      {"mean_accuracy", e.mean_accuracy},
                      {"accuracy_stderr", e.accuracy_stderr},
                      {"mean_format", e.mean_format}};
  if (e.thresholds) j["thresholds"] = to_json(*e.thresholds);
  return j;
}

}  // namespace gre::toy
