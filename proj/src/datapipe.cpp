#include "gre/datapipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "gre/evalbench.hpp"
#include "gre/jsonl.hpp"
#include "gre/reward.hpp"
#include "gre/rng.hpp"

namespace gre {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  const auto it = j.find(name);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw std::invalid_argument(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::string id_field(const json& j) {
  std::string id = string_field(j, "id");
  if (id.empty()) throw std::invalid_argument("field 'id' must be non-empty");
  return id;
}

GeoCoordinate coord_field(const json& j, const char* name) {
  try {
    return coordinate_from_json(field(j, name));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("field '") + name + "': " + e.what());
  }
}

json extra_fields(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool is_known =
        std::any_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; });
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

json with_extra(json j, const json& extra) {
  if (extra.is_object()) {
    for (auto it = extra.begin(); it != extra.end(); ++it) {
      if (!j.contains(it.key())) j[it.key()] = it.value();
    }
  }
  return j;
}

std::string describe_format_failure(const TaggedResponse& t) {
  if (!t.think_span && !t.answer_span) return "no well-ordered <think>/<answer> pairs";
  if (!t.think_span) return "missing or repeated <think></think> pair";
  if (!t.answer_span) return "missing or repeated <answer></answer> pair";
  return "empty think or answer span";
}

}  // namespace

std::string_view judge_label_text(bool label) noexcept { return label ? "Truth" : "False"; }

std::optional<bool> parse_judge_label(std::string_view s) noexcept {
  if (s == "Truth") return true;
  if (s == "False") return false;
  return std::nullopt;
}

json coordinate_to_json(const GeoCoordinate& c) { return {{"lat", c.lat()}, {"lon", c.lon()}}; }

GeoCoordinate coordinate_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("coordinate must be an object {lat, lon}");
  const auto lat = j.find("lat");
  const auto lon = j.find("lon");
  if (lat == j.end() || lon == j.end() || !lat->is_number() || !lon->is_number()) {
    throw std::invalid_argument("coordinate needs numeric 'lat' and 'lon'");
  }
  const auto c = GeoCoordinate::try_make(lat->get<double>(), lon->get<double>());
  if (!c) throw std::invalid_argument("coordinate out of range");
  return *c;
}

GeneratedRecord generated_from_json(const json& j) {
  GeneratedRecord r;
  r.id = id_field(j);
  r.image_ref = string_field(j, "image_ref");
  r.raw_response = string_field(j, "raw_response");
  r.truth = coord_field(j, "truth");
  r.extra = extra_fields(j, {"id", "image_ref", "raw_response", "truth"});
  return r;
}

CotRecord cot_from_json(const json& j) {
  CotRecord r;
  r.id = id_field(j);
  r.image_ref = string_field(j, "image_ref");
  r.think = string_field(j, "think");
  if (std::all_of(r.think.begin(), r.think.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw std::invalid_argument("field 'think' must be non-empty");
  }
  r.answer_coord = coord_field(j, "answer_coord");
  r.truth = coord_field(j, "truth");
  r.extra = extra_fields(j, {"id", "image_ref", "think", "answer_coord", "truth"});
  return r;
}

JudgeRecord judge_from_json(const json& j) {
  JudgeRecord r;
  r.id = id_field(j);
  r.image_ref = string_field(j, "image_ref");
  r.think = string_field(j, "think");
  r.answer_coord = string_field(j, "answer_coord");
  r.truth = coord_field(j, "truth");
  const auto label = parse_judge_label(string_field(j, "label"));
  if (!label) throw std::invalid_argument("field 'label' must be \"Truth\" or \"False\"");
  r.label = *label;
  r.extra = extra_fields(j, {"id", "image_ref", "think", "answer_coord", "truth", "label"});
  return r;
}

RejectRecord reject_from_json(const json& j) {
  RejectRecord r;
  r.id = string_field(j, "id");
  r.reason = string_field(j, "reason");
  r.detail = j.value("detail", std::string{});
  r.line = j.value("line", std::size_t{0});
  return r;
}

json to_json(const GeneratedRecord& r) {
  return with_extra({{"id", r.id},
                     {"image_ref", r.image_ref},
                     {"raw_response", r.raw_response},
                     {"truth", coordinate_to_json(r.truth)}},
                    r.extra);
}

json to_json(const CotRecord& r) {
  return with_extra({{"id", r.id},
                     {"image_ref", r.image_ref},
                     {"think", r.think},
                     {"answer_coord", coordinate_to_json(r.answer_coord)},
                     {"truth", coordinate_to_json(r.truth)}},
                    r.extra);
}

json to_json(const JudgeRecord& r) {
  return with_extra({{"id", r.id},
                     {"image_ref", r.image_ref},
                     {"think", r.think},
                     {"answer_coord", r.answer_coord},
                     {"truth", coordinate_to_json(r.truth)},
                     {"label", std::string(judge_label_text(r.label))}},
                    r.extra);
}

json to_json(const RejectRecord& r) {
  return {{"id", r.id}, {"line", r.line}, {"reason", r.reason}, {"detail", r.detail}};
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

SplitResult split_generated(std::span<const GeneratedRecord> records, const SplitOptions& opts) {
  if (!std::isfinite(opts.theta_km) || opts.theta_km <= 0.0) {
    throw std::invalid_argument("theta_km must be > 0");
  }
  if (!std::isfinite(opts.truth_ratio) || opts.truth_ratio < 0.0) {
    throw std::invalid_argument("truth_ratio must be >= 0");
  }
  SplitResult out;
  out.counts.input = records.size();
  std::unordered_set<std::string> seen;

  for (const auto& rec : records) {
    if (!seen.insert(rec.id).second) {
      out.rejects.push_back({rec.id, 0, "duplicate-id", "id already seen earlier in the input"});
      continue;
    }
    const TaggedResponse tags = extract_tags(rec.raw_response);
    if (format_reward(tags) == 0.0) {
      out.rejects.push_back({rec.id, 0, "format", describe_format_failure(tags)});
      continue;
    }
    const auto pred = parse_coordinate(*tags.answer_span);
    if (pred && geodesic_distance_km(*pred, rec.truth) <= opts.theta_km) {
      out.cot.push_back({rec.id, rec.image_ref, *tags.think_span, *pred, rec.truth, rec.extra});
    } else {
      out.judge.push_back(
          {rec.id, rec.image_ref, *tags.think_span, *tags.answer_span, rec.truth, false, rec.extra});
    }
  }

  out.counts.cot = out.cot.size();
  out.counts.judge_false = out.judge.size();
  out.counts.rejects = out.rejects.size();

  const auto wanted = static_cast<std::size_t>(
      std::llround(opts.truth_ratio * static_cast<double>(out.counts.judge_false)));
  const std::size_t take = std::min(wanted, out.cot.size());
  std::vector<std::size_t> perm = seeded_permutation(out.cot.size(), opts.seed);
  perm.resize(take);
  std::sort(perm.begin(), perm.end());
  for (std::size_t idx : perm) {
    const CotRecord& c = out.cot[idx];
    JudgeRecord j{c.id, c.image_ref, c.think, format_coordinate(c.answer_coord), c.truth, true, c.extra};
    j.extra["truth_copy"] = true;
    out.judge.push_back(std::move(j));
  }
  out.counts.judge_truth = take;
  return out;
}

LoadedGenerated load_generated(const std::filesystem::path& path) {
  LoadedGenerated out;
  for_each_jsonl(path, [&](const JsonLine& line) {
    if (!line.value) {
      out.rejects.push_back({"", line.line, "json", line.error});
      return;
    }
    try {
      out.records.push_back(generated_from_json(*line.value));
    } catch (const std::invalid_argument& e) {
      std::string id;
      if (line.value->is_object() && line.value->contains("id") && (*line.value)["id"].is_string()) {
        id = (*line.value)["id"].get<std::string>();
      }
      out.rejects.push_back({id, line.line, "schema", e.what()});
    }
  });
  return out;
}

std::vector<GeneratedRecord> sample_split(std::span<const GeneratedRecord> records,
                                          double fraction, std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("sample_split: empty input");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("sample_split: fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> by_id(records.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::stable_sort(by_id.begin(), by_id.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });
  const std::vector<std::size_t> perm = seeded_permutation(records.size(), seed);
  // Guard the ceiling against products like 0.07 * 100 = 7.000000000000001.
  const double exact = fraction * static_cast<double>(records.size());
  const auto keep = std::min(records.size(), static_cast<std::size_t>(std::ceil(exact - 1e-9)));
  std::vector<GeneratedRecord> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(records[by_id[perm[i]]]);
  return out;
}

std::string_view to_string(Schema s) noexcept {
  switch (s) {
    case Schema::generated: return "generated";
    case Schema::cot: return "cot";
    case Schema::judge: return "judge";
    case Schema::prediction: return "prediction";
  }
  return "unknown";
}

std::optional<Schema> parse_schema(std::string_view s) noexcept {
  for (Schema v : {Schema::generated, Schema::cot, Schema::judge, Schema::prediction}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

ValidationReport validate_file(const std::filesystem::path& path, Schema schema,
                               std::optional<double> theta_km) {
  ValidationReport report;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](const JsonLine& line) {
    ++report.count;
    if (!line.value) {
      report.violations.push_back({line.line, "malformed JSON: " + line.error});
      return;
    }
    const json& j = *line.value;
    try {
      std::string id;
      switch (schema) {
        case Schema::generated: id = generated_from_json(j).id; break;
        case Schema::cot: {
          const CotRecord r = cot_from_json(j);
          id = r.id;
          if (theta_km && geodesic_distance_km(r.answer_coord, r.truth) > *theta_km) {
            report.violations.push_back({line.line, "answer_coord farther than theta from truth"});
          }
          break;
        }
        case Schema::judge: {
          const JudgeRecord r = judge_from_json(j);
          id = r.id;
          if (theta_km) {
            const auto pred = parse_coordinate(r.answer_coord);
            const bool within = pred && geodesic_distance_km(*pred, r.truth) <= *theta_km;
            if (within != r.label) report.violations.push_back({line.line, "label-distance mismatch"});
          }
          break;
        }
        case Schema::prediction: id = prediction_from_json(j).id; break;
      }
      if (!ids.insert(id).second) report.violations.push_back({line.line, "duplicate id '" + id + "'"});
    } catch (const std::invalid_argument& e) {
      report.violations.push_back({line.line, e.what()});
    }
  });
  return report;
}

json to_json(const ValidationReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) violations.push_back({{"line", v.line}, {"message", v.message}});
  return {{"count", r.count}, {"violations", violations}, {"ok", r.ok()}};
}

json to_json(const SplitCounts& c) {
  return {{"input", c.input},
          {"cot", c.cot},
          {"judge_false", c.judge_false},
          {"judge_truth", c.judge_truth},
          {"rejects", c.rejects}};
}

}  // namespace gre
