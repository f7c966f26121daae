#pragma once

// Dataset mechanics for generated reasoning records: parse responses, split
// by a distance threshold into CoT and Judge subsets, validate JSONL files.
//
// JSONL field names are the struct field names; coordinates are objects
// {"lat": ..., "lon": ...}; unknown fields ride along in `extra` and are
// written back unchanged.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gre/geodesy.hpp"

namespace gre {

struct GeneratedRecord {
  std::string id;
  std::string image_ref;
  std::string raw_response;
  GeoCoordinate truth;
  nlohmann::json extra = nlohmann::json::object();
};

struct CotRecord {
  std::string id;
  std::string image_ref;
  std::string think;
  GeoCoordinate answer_coord;
  GeoCoordinate truth;
  nlohmann::json extra = nlohmann::json::object();
};

/// label is true for "Truth", false for "False". The truth coordinate is
/// stored so the label can be re-derived from the file alone.
struct JudgeRecord {
  std::string id;
  std::string image_ref;
  std::string think;
  std::string answer_coord;  // answer text as generated, parsed or not
  GeoCoordinate truth;
  bool label = false;
  nlohmann::json extra = nlohmann::json::object();
};

struct RejectRecord {
  std::string id;
  std::size_t line = 0;  // 1-based source line, 0 when unknown
  std::string reason;    // "format", "schema", "json", "duplicate-id"
  std::string detail;
};

std::string_view judge_label_text(bool label) noexcept;
std::optional<bool> parse_judge_label(std::string_view s) noexcept;

nlohmann::json coordinate_to_json(const GeoCoordinate& c);
/// Throws std::invalid_argument unless j is {"lat": number, "lon": number} in range.
GeoCoordinate coordinate_from_json(const nlohmann::json& j);

// Decoders throw std::invalid_argument naming the offending field.
GeneratedRecord generated_from_json(const nlohmann::json& j);
CotRecord cot_from_json(const nlohmann::json& j);
JudgeRecord judge_from_json(const nlohmann::json& j);
RejectRecord reject_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratedRecord& r);
nlohmann::json to_json(const CotRecord& r);
nlohmann::json to_json(const JudgeRecord& r);
nlohmann::json to_json(const RejectRecord& r);

struct SplitOptions {
  double theta_km = 25.0;
  double truth_ratio = 1.0;  // Truth judge entries per False entry
  std::uint64_t seed = 0;
};

struct SplitCounts {
  std::size_t input = 0;
  std::size_t cot = 0;          // within theta; also the Truth-label pool
  std::size_t judge_false = 0;  // beyond theta or unparseable answer
  std::size_t judge_truth = 0;  // flagged copies drawn from the cot pool
  std::size_t rejects = 0;
};

struct SplitResult {
  std::vector<CotRecord> cot;
  std::vector<JudgeRecord> judge;  // False entries in input order, then sampled Truth copies
  std::vector<RejectRecord> rejects;
  SplitCounts counts;
};

/// Buckets every record exactly once: cot (well-formed, answer within theta),
/// judge False (well-formed tags, answer beyond theta or unparseable), or
/// rejects (malformed tags, duplicate id). Truth judge entries are copies of
/// cot records sampled to truth_ratio x |False| with the seed.
SplitResult split_generated(std::span<const GeneratedRecord> records, const SplitOptions& opts);

struct LoadedGenerated {
  std::vector<GeneratedRecord> records;
  std::vector<RejectRecord> rejects;  // malformed JSON / schema violations
};

/// Reads a generated-records file; bad lines become rejects. Throws IoError.
LoadedGenerated load_generated(const std::filesystem::path& path);

/// Deterministic seeded sample without replacement: sort by id, permute with
/// the seed, keep the first ceil(fraction * N). Throws on empty input or a
/// fraction outside (0, 1].
std::vector<GeneratedRecord> sample_split(std::span<const GeneratedRecord> records,
                                          double fraction, std::uint64_t seed);

/// Platform-stable seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

enum class Schema { generated, cot, judge, prediction };

std::string_view to_string(Schema s) noexcept;
std::optional<Schema> parse_schema(std::string_view s) noexcept;

struct Violation {
  std::size_t line = 0;
  std::string message;
};

struct ValidationReport {
  std::size_t count = 0;
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Checks every line against the schema, plus duplicate ids. With a theta,
/// cot answers must lie within it and judge labels must match the distance
/// ("label-distance mismatch"). Throws IoError if the file is unreadable.
ValidationReport validate_file(const std::filesystem::path& path, Schema schema,
                               std::optional<double> theta_km = std::nullopt);

nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const SplitCounts& c);

}  // namespace gre
