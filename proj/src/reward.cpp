#include "gre/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace gre {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

struct TagPair {
  std::size_t open = std::string_view::npos;   // index of the opening tag
  std::size_t close = std::string_view::npos;  // index of the closing tag
  bool valid = false;
};

std::size_t count_occurrences(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

TagPair locate(std::string_view s, std::string_view open, std::string_view close) {
  TagPair p;
  if (count_occurrences(s, open) != 1 || count_occurrences(s, close) != 1) return p;
  p.open = s.find(open);
  p.close = s.find(close);
  p.valid = p.open + open.size() <= p.close;
  return p;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

void RewardConfig::validate() const {
  if (!std::isfinite(theta_km) || theta_km <= 0.0) {
    throw std::invalid_argument("theta_km must be finite and > 0");
  }
  if (!std::isfinite(accuracy_weight) || accuracy_weight < 0.0) {
    throw std::invalid_argument("accuracy_weight must be finite and >= 0");
  }
  if (!std::isfinite(format_weight) || format_weight < 0.0) {
    throw std::invalid_argument("format_weight must be finite and >= 0");
  }
}

TaggedResponse extract_tags(std::string_view raw) {
  TaggedResponse resp;
  resp.raw = std::string(raw);
  const TagPair think = locate(raw, kThinkOpen, kThinkClose);
  const TagPair answer = locate(raw, kAnswerOpen, kAnswerClose);

  if (think.valid && answer.valid && think.close + kThinkClose.size() > answer.open) {
    return resp;  // both pairs exist but are interleaved or reversed
  }
  if (think.valid) {
    const auto begin = think.open + kThinkOpen.size();
    resp.think_span = std::string(raw.substr(begin, think.close - begin));
  }
  if (answer.valid) {
    const auto begin = answer.open + kAnswerOpen.size();
    resp.answer_span = std::string(raw.substr(begin, answer.close - begin));
  }
  return resp;
}

double format_reward(const TaggedResponse& resp) noexcept {
  if (!resp.think_span || !resp.answer_span) return 0.0;
  if (is_blank(*resp.think_span) || is_blank(*resp.answer_span)) return 0.0;
  return 1.0;
}

std::optional<bool> extract_label(std::string_view answer) noexcept {
  const std::string s = lower(trim(answer));
  if (s == "true" || s == "truth" || s == "yes") return true;
  if (s == "false" || s == "no") return false;
  return std::nullopt;
}

double binary_accuracy_reward(bool pred_label, bool truth_label) noexcept {
  return pred_label == truth_label ? 1.0 : 0.0;
}

double geo_reward_from_distance(double distance_km, double theta_km) noexcept {
  return 2.0 / (1.0 + std::exp(distance_km / theta_km));
}

double geo_reward(const std::optional<GeoCoordinate>& pred, const GeoCoordinate& truth,
                  const RewardConfig& cfg) noexcept {
  if (!pred) return 0.0;
  return geo_reward_from_distance(geodesic_distance_km(*pred, truth), cfg.theta_km);
}

RewardBreakdown stage1_reward(std::string_view raw, bool truth_label, const RewardConfig& cfg) {
  const TaggedResponse resp = extract_tags(raw);
  RewardBreakdown r;
  r.format = format_reward(resp);
  if (resp.answer_span) {
    if (const auto label = extract_label(*resp.answer_span)) {
      r.accuracy = binary_accuracy_reward(*label, truth_label);
    }
  }
  r.total = cfg.accuracy_weight * r.accuracy + cfg.format_weight * r.format;
  return r;
}

RewardBreakdown stage2_reward(std::string_view raw, const GeoCoordinate& truth,
                              const RewardConfig& cfg) {
  const TaggedResponse resp = extract_tags(raw);
  RewardBreakdown r;
  r.format = format_reward(resp);
  if (resp.answer_span) {
    r.accuracy = geo_reward(parse_coordinate(*resp.answer_span), truth, cfg);
  }
  r.total = cfg.accuracy_weight * r.accuracy + cfg.format_weight * r.format;
  return r;
}

}  // namespace gre
