#include "gre/evalbench.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include "gre/datapipe.hpp"
#include "gre/scorer.hpp"

namespace gre {

namespace {

using nlohmann::json;

void check_thresholds(std::span<const double> t) {
  if (t.empty()) throw std::invalid_argument("threshold list is empty");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || t[i] <= 0.0) throw std::invalid_argument("thresholds must be > 0");
    if (i > 0 && !(t[i] > t[i - 1])) {
      throw std::invalid_argument("thresholds must be strictly increasing");
    }
  }
}

std::string optional_string(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

CotStep step_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("step must be an object {text, category}");
  const auto text = j.find("text");
  if (text == j.end() || !text->is_string()) throw std::invalid_argument("step needs a string 'text'");
  CotStep step{text->get<std::string>(), std::nullopt};
  const std::string cat = optional_string(j, "category");
  if (!cat.empty()) {
    step.category = parse_step_category(cat);
    if (!step.category) throw std::invalid_argument("unknown step category '" + cat + "'");
  }
  return step;
}

std::string join_steps(std::span<const CotStep> steps, StepCategory cat) {
  std::string out;
  for (const auto& s : steps) {
    if (s.category != cat) continue;
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

}  // namespace

std::string_view to_string(StepCategory c) noexcept {
  switch (c) {
    case StepCategory::background: return "background";
    case StepCategory::caption: return "caption";
    case StepCategory::inference: return "inference";
  }
  return "unknown";
}

std::optional<StepCategory> parse_step_category(std::string_view s) noexcept {
  for (StepCategory c : {StepCategory::background, StepCategory::caption, StepCategory::inference}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

PredictionRecord prediction_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  PredictionRecord r;
  const auto id = j.find("id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw std::invalid_argument("field 'id' must be a non-empty string");
  }
  r.id = id->get<std::string>();

  const auto truth = j.find("truth");
  if (truth == j.end()) throw std::invalid_argument("missing field 'truth'");
  r.truth = coordinate_from_json(*truth);

  // pred: coordinate object, coordinate text, or null/garbage kept as unparsed.
  const auto pred = j.find("pred");
  if (pred == j.end()) throw std::invalid_argument("missing field 'pred'");
  if (pred->is_object()) {
    try {
      r.pred = coordinate_from_json(*pred);
    } catch (const std::invalid_argument&) {
      r.pred_raw = pred->dump();
    }
  } else if (pred->is_string()) {
    r.pred = parse_coordinate(pred->get<std::string>());
    if (!r.pred) r.pred_raw = pred->get<std::string>();
  } else {
    r.pred_raw = pred->dump();
  }

  if (const auto steps = j.find("steps"); steps != j.end() && !steps->is_null()) {
    if (!steps->is_array()) throw std::invalid_argument("field 'steps' must be an array");
    std::vector<CotStep> parsed;
    for (const auto& s : *steps) parsed.push_back(step_from_json(s));
    r.steps = std::move(parsed);
  }
  if (std::string s = optional_string(j, "image_ref"); !s.empty()) r.image_ref = std::move(s);
  if (std::string s = optional_string(j, "reference"); !s.empty()) r.reference = std::move(s);

  for (auto it = j.begin(); it != j.end(); ++it) {
    static const std::array<std::string_view, 6> known{"id", "pred", "truth", "steps", "image_ref",
                                                       "reference"};
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) r.extra[it.key()] = it.value();
  }
  return r;
}

json to_json(const PredictionRecord& r) {
  json j{{"id", r.id}, {"truth", coordinate_to_json(r.truth)}};
  j["pred"] = r.pred ? coordinate_to_json(*r.pred) : json(r.pred_raw);
  if (r.steps) {
    json steps = json::array();
    for (const auto& s : *r.steps) {
      json step{{"text", s.text}};
      if (s.category) step["category"] = std::string(to_string(*s.category));
      steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);
  }
  if (r.image_ref) j["image_ref"] = *r.image_ref;
  if (r.reference) j["reference"] = *r.reference;
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it) {
    if (!j.contains(it.key())) j[it.key()] = it.value();
  }
  return j;
}

const std::vector<double>& default_thresholds_km() {
  static const std::vector<double> t{1.0, 25.0, 200.0, 750.0, 2500.0};
  return t;
}

std::string threshold_label(double km) {
  static const std::array<std::pair<double, const char*>, 5> names{
      {{1.0, "Street"}, {25.0, "City"}, {200.0, "Region"}, {750.0, "Country"}, {2500.0, "Continent"}}};
  for (const auto& [t, name] : names) {
    if (t == km) return name;
  }
  json j = km;
  return j.dump() + " km";
}

ThresholdReport threshold_metrics_from_distances(std::span<const double> distances_km,
                                                 std::size_t unparsed,
                                                 std::span<const double> thresholds_km) {
  check_thresholds(thresholds_km);
  const std::size_t n = distances_km.size() + unparsed;
  if (n == 0) throw std::invalid_argument("threshold metrics need at least one prediction");

  std::vector<double> sorted(distances_km.begin(), distances_km.end());
  std::sort(sorted.begin(), sorted.end());
  ThresholdReport r;
  r.thresholds_km.assign(thresholds_km.begin(), thresholds_km.end());
  r.n = n;
  r.unparsed = unparsed;
  for (double t : thresholds_km) {
    const auto hits = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    r.hits.push_back(hits);
    r.accuracy_pct.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(n));
  }
  return r;
}

ThresholdReport threshold_metrics(std::span<const PredictionRecord> preds,
                                  std::span<const double> thresholds_km) {
  if (preds.empty()) throw std::invalid_argument("threshold metrics need at least one prediction");
  std::vector<GeoCoordinate> a, b;
  a.reserve(preds.size());
  b.reserve(preds.size());
  std::size_t unparsed = 0;
  for (const auto& p : preds) {
    if (!p.pred) {
      ++unparsed;
      continue;
    }
    a.push_back(*p.pred);
    b.push_back(p.truth);
  }
  return threshold_metrics_from_distances(geodesic_distances_km(a, b), unparsed, thresholds_km);
}

json to_json(const ThresholdReport& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.thresholds_km.size(); ++i) {
    rows.push_back({{"threshold_km", r.thresholds_km[i]},
                    {"label", threshold_label(r.thresholds_km[i])},
                    {"hits", r.hits[i]},
                    {"accuracy_pct", r.accuracy_pct[i]}});
  }
  return {{"n", r.n}, {"unparsed", r.unparsed}, {"thresholds", rows}};
}

std::string normalize_indicator_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    // Bytes >= 0x80 (UTF-8 continuation etc.) are kept verbatim.
    const bool separator = c < 0x80 && (std::isspace(c) || std::ispunct(c));
    if (separator) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
  }
  return out;
}

RecallDetail recall_detail(std::span<const CotStep> background_steps,
                           std::span<const std::string> indicator_corpus) {
  if (indicator_corpus.empty()) throw UndefinedRecall("recall is undefined for an empty corpus");
  RecallDetail d;
  for (const auto& s : background_steps) {
    const std::string part = normalize_indicator_text(s.text);
    if (part.empty()) continue;
    if (!d.normalized_text.empty()) d.normalized_text += ' ';
    d.normalized_text += part;
  }
  const std::string padded = ' ' + d.normalized_text + ' ';
  std::size_t hits = 0;
  for (const auto& indicator : indicator_corpus) {
    std::string needle = normalize_indicator_text(indicator);
    const bool hit = !needle.empty() && padded.find(needle) != std::string::npos;
    hits += hit ? 1 : 0;
    d.normalized_indicators.push_back(std::move(needle));
    d.matched.push_back(hit);
  }
  d.recall = static_cast<double>(hits) / static_cast<double>(indicator_corpus.size());
  return d;
}

double corpus_recall(std::span<const CotStep> background_steps,
                     std::span<const std::string> indicator_corpus) {
  return recall_detail(background_steps, indicator_corpus).recall;
}

json to_json(const RecallDetail& d) {
  json indicators = json::array();
  for (std::size_t i = 0; i < d.normalized_indicators.size(); ++i) {
    indicators.push_back({{"normalized", d.normalized_indicators[i]}, {"matched", static_cast<bool>(d.matched[i])}});
  }
  return {{"normalized_text", d.normalized_text}, {"indicators", indicators}, {"recall", d.recall}};
}

double cot_quality(double recall, double refclip, double bert_score) {
  for (double v : {recall, refclip, bert_score}) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::out_of_range("cot_quality components must lie in [0, 1]");
  }
  return (recall + refclip + bert_score) / 3.0;
}

std::pair<std::string, std::vector<CorpusEntry>> corpus_entry_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("corpus line is not a JSON object");
  const auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw std::invalid_argument("corpus line needs a string 'id'");
  const auto list = j.find("indicators");
  if (list == j.end() || !list->is_array()) {
    throw std::invalid_argument("corpus line needs an 'indicators' array");
  }
  std::vector<CorpusEntry> entries;
  for (const auto& item : *list) {
    if (item.is_string()) {
      entries.push_back({item.get<std::string>(), ""});
    } else if (item.is_object() && item.contains("text") && item["text"].is_string()) {
      entries.push_back({item["text"].get<std::string>(), optional_string(item, "tag")});
    } else {
      throw std::invalid_argument("indicator must be a string or {text, tag}");
    }
  }
  return {id->get<std::string>(), std::move(entries)};
}

namespace {

struct ScoredMode {
  double value = 0.0;
  bool clamped = false;
};

ScoredMode request_score(ScorerClient& scorer, ScoreRequest req) {
  const ScoreResponse resp = scorer.score(req);
  if (resp.error) throw std::runtime_error(std::string(to_string(req.mode)) + ": " + *resp.error);
  if (!resp.score || !std::isfinite(*resp.score)) {
    throw std::runtime_error(std::string(to_string(req.mode)) + ": response without a finite score");
  }
  const double v = std::clamp(*resp.score, 0.0, 1.0);
  return {v, v != *resp.score};
}

}  // namespace

CotBatchReport evaluate_cot_batch(std::span<const PredictionRecord> records,
                                  const CorpusIndex& corpus, ScorerClient& scorer) {
  std::vector<const PredictionRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });

  CotBatchReport report;
  for (const PredictionRecord* rec : order) {
    CotRecordResult result;
    result.id = rec->id;
    if (!rec->steps || rec->steps->empty()) {
      result.status = CotRecordResult::Status::no_steps;
      ++report.excluded_no_steps;
      report.records.push_back(std::move(result));
      continue;
    }
    try {
      std::vector<CotStep> steps = *rec->steps;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].category) continue;
        ScoreRequest req{rec->id + "/categorize/" + std::to_string(i), ScoreMode::categorize,
                         steps[i].text, std::nullopt, std::nullopt};
        const ScoreResponse resp = scorer.score(req);
        if (resp.error) throw std::runtime_error("categorize: " + *resp.error);
        const auto cat = resp.category ? parse_step_category(*resp.category) : std::nullopt;
        if (!cat) throw std::runtime_error("categorize: response without a valid category");
        steps[i].category = cat;
        ++report.scorer_categorized;
      }

      const auto it = corpus.find(rec->id);
      if (it == corpus.end()) throw UndefinedRecall("no corpus indicators for this record");
      std::vector<std::string> indicators;
      for (const auto& e : it->second) indicators.push_back(e.text);
      std::vector<CotStep> background;
      std::copy_if(steps.begin(), steps.end(), std::back_inserter(background),
                   [](const CotStep& s) { return s.category == StepCategory::background; });

      result.recall = recall_detail(background, indicators);
      CoTQualityReport q;
      q.recall = result.recall->recall;

      const std::string caption = join_steps(steps, StepCategory::caption);
      if (!caption.empty()) {
        const ScoredMode s = request_score(
            scorer, {rec->id + "/refclip", ScoreMode::refclip, caption, std::nullopt, rec->image_ref});
        q.refclip_score = s.value;
        report.clamped_scores += s.clamped ? 1 : 0;
      }
      const std::string inference = join_steps(steps, StepCategory::inference);
      if (!inference.empty()) {
        const ScoredMode s = request_score(
            scorer, {rec->id + "/bert", ScoreMode::bert, inference, rec->reference, std::nullopt});
        q.bert_score = s.value;
        report.clamped_scores += s.clamped ? 1 : 0;
      }
      q.cot_quality = cot_quality(q.recall, q.refclip_score, q.bert_score);
      result.quality = q;
      ++report.scored;
    } catch (const std::exception& e) {
      result.status = CotRecordResult::Status::error;
      result.error = e.what();
      ++report.errored;
    }
    report.records.push_back(std::move(result));
  }

  if (report.scored > 0) {
    CoTQualityReport mean;
    for (const auto& r : report.records) {
      if (!r.quality) continue;
      mean.recall += r.quality->recall;
      mean.refclip_score += r.quality->refclip_score;
      mean.bert_score += r.quality->bert_score;
    }
    const auto n = static_cast<double>(report.scored);
    mean.recall /= n;
    mean.refclip_score /= n;
    mean.bert_score /= n;
    mean.cot_quality = cot_quality(mean.recall, mean.refclip_score, mean.bert_score);
    report.mean = mean;
  }
  return report;
}

json to_json(const CoTQualityReport& q) {
  return {{"recall", q.recall},
          {"refclip_score", q.refclip_score},
          {"bert_score", q.bert_score},
          {"cot_quality", q.cot_quality},
          {"cot_quality_x100", 100.0 * q.cot_quality}};
}

json to_json(const CotBatchReport& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    json j{{"id", rec.id}};
    switch (rec.status) {
      case CotRecordResult::Status::scored: j["status"] = "scored"; break;
      case CotRecordResult::Status::no_steps: j["status"] = "no_steps"; break;
      case CotRecordResult::Status::error: j["status"] = "error"; break;
    }
    j["quality"] = rec.quality ? to_json(*rec.quality) : json(nullptr);
    if (!rec.error.empty()) j["error"] = rec.error;
    records.push_back(std::move(j));
  }
  return {{"mean", r.mean ? to_json(*r.mean) : json(nullptr)},
          {"scored", r.scored},
          {"excluded_no_steps", r.excluded_no_steps},
          {"errored", r.errored},
          {"clamped_scores", r.clamped_scores},
          {"scorer_categorized", r.scorer_categorized},
          {"categorization_deterministic", r.scorer_categorized == 0},
          {"records", records}};
}

}  // namespace gre
