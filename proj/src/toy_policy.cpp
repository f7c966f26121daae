#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gre/kernels.hpp"
#include "gre/toy.hpp"

namespace gre::toy {

ToyPolicy::ToyPolicy(Vocabulary vocab, std::size_t prompt_dim, std::size_t max_len)
    : vocab_(std::move(vocab)), prompt_dim_(prompt_dim), max_len_(max_len) {
  if (vocab_.size() == 0) throw std::invalid_argument("policy vocabulary is empty");
  if (max_len_ == 0) throw std::invalid_argument("policy max_len must be positive");
  params_.assign(feature_dim() * vocab_.size(), 0.0);
}

std::vector<double> ToyPolicy::features(std::span<const double> prompt,
                                        std::size_t position) const {
  if (prompt.size() != prompt_dim_) throw std::invalid_argument("prompt feature width mismatch");
  if (position >= max_len_) throw std::out_of_range("position beyond policy max_len");
  std::vector<double> x(feature_dim(), 0.0);
  std::copy(prompt.begin(), prompt.end(), x.begin());
  x[prompt_dim_ + position] = 1.0;
  return x;
}

std::vector<double> ToyPolicy::logits(std::span<const double> prompt, std::size_t position) const {
  if (prompt.size() != prompt_dim_) throw std::invalid_argument("prompt feature width mismatch");
  if (position >= max_len_) throw std::out_of_range("position beyond policy max_len");
  const std::size_t v = vocab_.size();
  // Position one-hot selects a single row; prompt features mix the rest.
  std::vector<double> z(params_.begin() + static_cast<std::ptrdiff_t>((prompt_dim_ + position) * v),
                        params_.begin() + static_cast<std::ptrdiff_t>((prompt_dim_ + position + 1) * v));
  for (std::size_t f = 0; f < prompt_dim_; ++f) {
    const double xf = prompt[f];
    if (xf == 0.0) continue;
    const double* row = &params_[f * v];
    for (std::size_t k = 0; k < v; ++k) z[k] += xf * row[k];
  }
  return z;
}

std::vector<double> ToyPolicy::log_probs(std::span<const double> prompt,
                                         std::size_t position) const {
  std::vector<double> z = logits(prompt, position);
  kernels::log_softmax(z, z);
  return z;
}

std::vector<double> ToyPolicy::sequence_log_probs(std::span<const double> prompt,
                                                  std::span<const std::size_t> tokens) const {
  std::vector<double> out(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    // A token of probability zero would give -inf; clamp to keep rollouts finite.
    out[t] = std::max(log_probs(prompt, t).at(tokens[t]), -700.0);
  }
  return out;
}

bool ToyPolicy::finite() const noexcept {
  return std::all_of(params_.begin(), params_.end(), [](double w) { return std::isfinite(w); });
}

ToyPolicy make_uniform_policy(const ToyEnvironment& env, std::size_t max_len) {
  return ToyPolicy(env.vocab, env.prompt_dim(), max_len);
}

ToyPolicy make_cold_start_policy(const ToyEnvironment& env, double target_mass) {
  if (!(target_mass > 0.0 && target_mass < 1.0)) {
    throw std::invalid_argument("cold-start target mass must lie in (0, 1)");
  }
  ToyPolicy policy = make_uniform_policy(env, kCanonicalLength);
  const auto& vocab = env.vocab;
  const std::vector<std::vector<std::size_t>> layout = {
      vocab.with_role(TokenRole::think_open),  vocab.with_role(TokenRole::filler),
      vocab.with_role(TokenRole::think_close), vocab.with_role(TokenRole::answer_open),
      env.answer_tokens(),                     vocab.with_role(TokenRole::answer_close),
  };
  const double v = static_cast<double>(vocab.size());
  for (std::size_t pos = 0; pos < layout.size(); ++pos) {
    const double k = static_cast<double>(layout[pos].size());
    if (k == 0.0 || k == v) continue;
    // k e^b / (k e^b + v - k) = target_mass
    const double boost = std::log(target_mass * (v - k) / (k * (1.0 - target_mass)));
    for (std::size_t tok : layout[pos]) policy.weight(policy.prompt_dim() + pos, tok) = boost;
  }
  return policy;
}

}  // namespace gre::toy
