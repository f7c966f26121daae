#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gre/geodesy.hpp"

namespace gre {

class ScorerClient;

enum class StepCategory { background, caption, inference };

std::string_view to_string(StepCategory c) noexcept;
std::optional<StepCategory> parse_step_category(std::string_view s) noexcept;

struct CotStep {
  std::string text;
  /// Absent when the input did not categorize the step; the scorer channel
  /// may then assign one (mode "categorize").
  std::optional<StepCategory> category;
};

struct PredictionRecord {
  std::string id;
  std::optional<GeoCoordinate> pred;  // absent when the prediction did not parse
  std::string pred_raw;               // original text of an unparsed prediction
  GeoCoordinate truth;
  std::optional<std::vector<CotStep>> steps;
  std::optional<std::string> image_ref;  // needed for caption (refclip) scoring
  std::optional<std::string> reference;  // reference rationale for inference (bert) scoring
  nlohmann::json extra = nlohmann::json::object();
};

/// Throws std::invalid_argument describing the first schema problem.
PredictionRecord prediction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PredictionRecord& r);

/// 1, 25, 200, 750 and 2500 km: street, city, region, country, continent.
const std::vector<double>& default_thresholds_km();
/// "Street" ... "Continent" for the default thresholds, "<x> km" otherwise.
std::string threshold_label(double km);

struct ThresholdReport {
  std::vector<double> thresholds_km;
  std::vector<double> accuracy_pct;
  std::vector<std::size_t> hits;
  std::size_t n = 0;
  std::size_t unparsed = 0;
};

/// Percentage of records whose distance to the truth is <= each threshold.
/// Unparsed predictions count in n and never as hits. Throws
/// std::invalid_argument on empty input or unsorted/non-positive thresholds.
ThresholdReport threshold_metrics(std::span<const PredictionRecord> preds,
                                  std::span<const double> thresholds_km);

ThresholdReport threshold_metrics_from_distances(std::span<const double> distances_km,
                                                 std::size_t unparsed,
                                                 std::span<const double> thresholds_km);

nlohmann::json to_json(const ThresholdReport& r);

/// Case-folded, punctuation replaced by spaces, whitespace collapsed and trimmed.
std::string normalize_indicator_text(std::string_view s);

class UndefinedRecall : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fraction of corpus indicators whose normalized form occurs as a substring
/// of the normalized, space-joined step texts. Throws UndefinedRecall for an
/// empty corpus.
double corpus_recall(std::span<const CotStep> background_steps,
                     std::span<const std::string> indicator_corpus);

/// The normalized forms behind a recall value, for auditing matches.
struct RecallDetail {
  std::string normalized_text;
  std::vector<std::string> normalized_indicators;
  std::vector<bool> matched;
  double recall = 0.0;
};

RecallDetail recall_detail(std::span<const CotStep> background_steps,
                           std::span<const std::string> indicator_corpus);
nlohmann::json to_json(const RecallDetail& d);

struct CoTQualityReport {
  double recall = 0.0;
  double refclip_score = 0.0;
  double bert_score = 0.0;
  double cot_quality = 0.0;
};

/// Mean of the three components; throws std::out_of_range outside [0, 1].
double cot_quality(double recall, double refclip, double bert_score);

struct CorpusEntry {
  std::string text;
  std::string tag;  // "explicit" or "implicit" (may be empty)
};

using CorpusIndex = std::map<std::string, std::vector<CorpusEntry>>;

/// Parses one corpus JSONL object {"id": ..., "indicators": [...]}; indicators
/// are strings or {"text": ..., "tag": ...} objects.
std::pair<std::string, std::vector<CorpusEntry>> corpus_entry_from_json(const nlohmann::json& j);

struct CotRecordResult {
  enum class Status { scored, no_steps, error };
  std::string id;
  Status status = Status::scored;
  std::optional<CoTQualityReport> quality;
  std::optional<RecallDetail> recall;  // set once recall was computed
  std::string error;
};

struct CotBatchReport {
  std::vector<CotRecordResult> records;  // sorted by id
  std::optional<CoTQualityReport> mean;  // over scored records
  std::size_t scored = 0;
  std::size_t excluded_no_steps = 0;
  std::size_t errored = 0;
  std::size_t clamped_scores = 0;       // scorer values outside [0, 1]
  std::size_t scorer_categorized = 0;   // steps categorized by the scorer (non-deterministic)
};

/// Scores every record: recall natively from background steps, caption steps
/// through the scorer in "refclip" mode, inference steps in "bert" mode
/// against the record's reference rationale. A missing category contributes 0.
/// Scorer failures mark the record as errored and the batch continues.
CotBatchReport evaluate_cot_batch(std::span<const PredictionRecord> records,
                                  const CorpusIndex& corpus, ScorerClient& scorer);

nlohmann::json to_json(const CoTQualityReport& q);
nlohmann::json to_json(const CotBatchReport& r);

}  // namespace gre
