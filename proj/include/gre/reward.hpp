#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gre/geodesy.hpp"

namespace gre {

/// Weights and scale of the rule-based rewards. Immutable once validated.
struct RewardConfig {
  double theta_km = 25.0;  // distance scale of the geodesic reward
  double accuracy_weight = 1.0;
  double format_weight = 1.0;

  /// Throws std::invalid_argument unless theta_km > 0, weights >= 0, all finite.
  void validate() const;
  double max_total() const noexcept { return accuracy_weight + format_weight; }
};

/// A generated response split into its reasoning and answer spans.
///
/// A span is present only when its tag pair occurs exactly once, opening tag
/// first, and (when both pairs exist) the think pair closes before the answer
/// pair opens. Out-of-order pairs leave both spans absent.
struct TaggedResponse {
  std::string raw;
  std::optional<std::string> think_span;
  std::optional<std::string> answer_span;
};

TaggedResponse extract_tags(std::string_view raw);

/// 1.0 when both spans are present and non-blank, else 0.0.
double format_reward(const TaggedResponse& resp) noexcept;

/// Maps an answer to a judgment label: "true"/"truth"/"yes" -> true,
/// "false"/"no" -> false (trimmed, case-insensitive). Anything else is
/// an extraction failure.
std::optional<bool> extract_label(std::string_view answer) noexcept;

double binary_accuracy_reward(bool pred_label, bool truth_label) noexcept;

/// 2 / (1 + exp(d / theta)) for a distance d >= 0.
double geo_reward_from_distance(double distance_km, double theta_km) noexcept;

/// Geodesic reward; an absent prediction (failed parse) earns exactly 0.
double geo_reward(const std::optional<GeoCoordinate>& pred, const GeoCoordinate& truth,
                  const RewardConfig& cfg) noexcept;

struct RewardBreakdown {
  double format = 0.0;    // unweighted format component
  double accuracy = 0.0;  // unweighted accuracy component
  double total = 0.0;     // accuracy_weight * accuracy + format_weight * format
};

/// Judgment stage: label accuracy plus format. Label extraction failures score 0.
RewardBreakdown stage1_reward(std::string_view raw, bool truth_label, const RewardConfig& cfg);

/// Coordinate stage: geodesic reward of the parsed answer plus format.
RewardBreakdown stage2_reward(std::string_view raw, const GeoCoordinate& truth,
                              const RewardConfig& cfg);

}  // namespace gre
