#pragma once

// Desk-scale stand-in for the two reinforcement-learning stages: a linear
// softmax policy over a tiny vocabulary that contains the literal tag tokens,
// a judgment environment (answer True/False) and a coordinate-grid
// environment (answer one cell of a lat/lon lattice).
//
// The policy is position-conditioned: the logits at step t are
//   [prompt features, one-hot(t)] . W
// so a sequence is sampled one independent softmax per position. The canonical
// well-formed response is six tokens:
//   <think> filler </think> <answer> ANSWER </answer>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gre/evalbench.hpp"
#include "gre/geodesy.hpp"
#include "gre/grpo.hpp"
#include "gre/reward.hpp"
#include "gre/rng.hpp"

namespace gre::toy {

inline constexpr std::size_t kCanonicalLength = 6;
inline constexpr std::size_t kAnswerPosition = 4;

enum class TokenRole { think_open, think_close, answer_open, answer_close, filler, label, cell };

struct Vocabulary {
  std::vector<std::string> text;  // rendered form, concatenated verbatim into responses
  std::vector<TokenRole> role;

  std::size_t size() const noexcept { return text.size(); }
  void add(std::string t, TokenRole r);
  std::vector<std::size_t> with_role(TokenRole r) const;
  std::string render(std::span<const std::size_t> tokens) const;
};

/// rows x cols lattice over a lat/lon box. Cell centers are canonicalized
/// through their "(lat, lon)" rendering so a rendered center parses back to
/// exactly the stored coordinate.
struct GeoGrid {
  double lat_min = 48.0;
  double lat_max = 49.2;
  double lon_min = 1.8;
  double lon_max = 3.0;
  std::size_t rows = 6;
  std::size_t cols = 6;

  void validate() const;
  std::size_t cell_count() const noexcept { return rows * cols; }
  GeoCoordinate cell_center(std::size_t cell) const;
  std::string cell_text(std::size_t cell) const;
  /// Cell containing the coordinate; nullopt outside the box.
  std::optional<std::size_t> cell_of(const GeoCoordinate& c) const;
};

enum class EnvKind { judge, geo_grid };

std::string_view to_string(EnvKind k) noexcept;

struct ToyInstance {
  std::vector<double> features;
  std::variant<bool, GeoCoordinate> truth;
};

struct ToyEnvironment {
  EnvKind kind = EnvKind::judge;
  Vocabulary vocab;
  std::vector<ToyInstance> instances;
  std::optional<GeoGrid> grid;

  std::size_t prompt_dim() const;
  std::vector<std::size_t> answer_tokens() const;
  /// Feature widths agree, truth types match the kind, geo truths lie on lattice centers.
  void validate() const;
  /// Stage I reward for judge environments, stage II for geo_grid.
  RewardBreakdown reward(std::size_t instance, std::string_view text,
                         const RewardConfig& cfg) const;
};

/// Balanced judgment instances built from synthetic prediction/truth pairs:
/// half within theta_km of the truth (label True), half beyond (label False).
/// Features: [1, clamp(log(d/theta), -3, 3) / 3, uniform noise].
ToyEnvironment make_judge_env(std::size_t n_instances, double theta_km, std::uint64_t seed);

/// One instance per truth cell with one-hot instance features.
ToyEnvironment make_geo_grid_env(const GeoGrid& grid, std::span<const std::size_t> truth_cells);

class ToyPolicy {
 public:
  ToyPolicy(Vocabulary vocab, std::size_t prompt_dim, std::size_t max_len);

  const Vocabulary& vocab() const noexcept { return vocab_; }
  std::size_t prompt_dim() const noexcept { return prompt_dim_; }
  std::size_t max_len() const noexcept { return max_len_; }
  std::size_t feature_dim() const noexcept { return prompt_dim_ + max_len_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }

  /// Row-major feature_dim x vocab_size logit weights.
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  double& weight(std::size_t feature, std::size_t token) {
    return params_[feature * vocab_.size() + token];
  }

  std::vector<double> features(std::span<const double> prompt, std::size_t position) const;
  std::vector<double> logits(std::span<const double> prompt, std::size_t position) const;
  std::vector<double> log_probs(std::span<const double> prompt, std::size_t position) const;
  /// Chosen-token log-probabilities of a whole sequence.
  std::vector<double> sequence_log_probs(std::span<const double> prompt,
                                         std::span<const std::size_t> tokens) const;

  bool finite() const noexcept;

 private:
  Vocabulary vocab_;
  std::size_t prompt_dim_;
  std::size_t max_len_;
  std::vector<double> params_;
};

/// All-zero weights: every position uniform over the vocabulary.
ToyPolicy make_uniform_policy(const ToyEnvironment& env, std::size_t max_len = kCanonicalLength);

/// Emulates supervised cold start: at each canonical position the intended
/// token class (tags, filler, answer tokens) receives total probability
/// `target_mass`, spread uniformly within the class.
ToyPolicy make_cold_start_policy(const ToyEnvironment& env, double target_mass = 0.9);

struct SampledGroup {
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<std::string> texts;
  RolloutGroup group;  // logp_new == logp_old; logp_ref from the reference (or the policy)
};

SampledGroup sample_rollouts(const ToyPolicy& policy, std::span<const double> prompt,
                             std::size_t group_size, Rng& rng,
                             const ToyPolicy* reference = nullptr);
SampledGroup sample_rollouts(const ToyPolicy& policy, std::span<const double> prompt,
                             std::size_t group_size, std::uint64_t seed,
                             const ToyPolicy* reference = nullptr);

/// Rollouts whose tokens and old/reference log-probs are fixed, so the loss
/// is a differentiable function of the current policy weights alone.
struct FrozenGroup {
  std::vector<double> prompt;
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<std::vector<double>> logp_old;
  std::vector<std::vector<double>> logp_ref;
  std::vector<double> rewards;
};

struct PolicyGradient {
  GrpoLoss loss;
  std::vector<double> grad;  // dL/dW, same layout as ToyPolicy::params()
};

/// GRPO loss of a frozen group under `policy`, and its exact gradient with
/// respect to the policy weights (chain rule through the softmax).
PolicyGradient policy_loss_and_gradient(const ToyPolicy& policy, const FrozenGroup& frozen,
                                        const GrpoConfig& cfg);

struct TrainOptions {
  std::size_t steps = 200;
  double lr = 0.5;
  std::size_t group_size = 8;
  std::uint64_t seed = 0;
  std::size_t prompts_per_step = 1;
  std::size_t updates_per_batch = 1;  // >1 re-optimizes the same rollouts (ratios leave 1)
};

struct StepStats {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_format = 0.0;
  double mean_accuracy = 0.0;
  double loss = 0.0;
  double kl_mean = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<StepStats> curve;  // one entry per step, rewards measured before the update
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain gradient-descent GRPO. The reference policy is `initial`. Throws
/// TrainingDiverged if the loss or weights become non-finite.
TrainResult train_stage(const ToyEnvironment& env, const ToyPolicy& initial,
                        const GrpoConfig& grpo_cfg, const RewardConfig& reward_cfg,
                        const TrainOptions& opts);

struct PolicyEvaluation {
  std::size_t n = 0;
  double mean_reward = 0.0;
  double reward_stderr = 0.0;
  double mean_accuracy = 0.0;
  double accuracy_stderr = 0.0;
  double mean_format = 0.0;
  std::optional<ThresholdReport> thresholds;  // geo_grid only
};

/// Monte Carlo evaluation over n_samples responses, instances visited round-robin.
/// Throws std::invalid_argument("no instances") for an empty environment.
PolicyEvaluation evaluate_policy(const ToyEnvironment& env, const ToyPolicy& policy,
                                 std::size_t n_samples, std::uint64_t seed,
                                 const RewardConfig& reward_cfg);

/// Most probable token at the answer position for one instance.
std::size_t modal_answer(const ToyPolicy& policy, const ToyEnvironment& env,
                         std::size_t instance);

struct RunManifest {
  std::uint64_t seed = 0;
  EnvKind stage = EnvKind::judge;
  GrpoConfig grpo;
  RewardConfig reward;
  TrainOptions options;
  std::string environment;  // human-readable environment description
  std::string kernel_isa;
  std::string tool_version;
};

nlohmann::json to_json(const RunManifest& m);
nlohmann::json to_json(const StepStats& s);
nlohmann::json to_json(const PolicyEvaluation& e);

}  // namespace gre::toy
