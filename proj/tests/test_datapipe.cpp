#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "fixture_gen.hpp"
#include "gre/datapipe.hpp"
#include "gre/jsonl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gre_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<gre::GeneratedRecord> records_of(const std::vector<fixture::Item>& items) {
  std::vector<gre::GeneratedRecord> out;
  for (const auto& it : items) out.push_back(it.record);
  return out;
}

}  // namespace

TEST_CASE("split buckets match the construction") {
  const auto items = fixture::partition_fixture(300, 25.0, 12);
  const auto recs = records_of(items);
  const gre::SplitResult res = gre::split_generated(recs, {25.0, 1.0, 5});

  std::size_t cot = 0, judge_false = 0, rejects = 0;
  for (const auto& it : items) {
    cot += it.bucket == fixture::Bucket::cot;
    judge_false += it.bucket == fixture::Bucket::judge_false;
    rejects += it.bucket == fixture::Bucket::reject_format || it.bucket == fixture::Bucket::reject_duplicate;
  }
  CHECK(res.counts.input == 300);
  CHECK(res.counts.cot == cot);
  CHECK(res.counts.judge_false == judge_false);
  CHECK(res.counts.rejects == rejects);
  CHECK(res.counts.cot + res.counts.judge_false + res.counts.rejects == res.counts.input);
  CHECK(res.counts.judge_truth == std::min(cot, judge_false));
  CHECK(res.judge.size() == res.counts.judge_false + res.counts.judge_truth);

  // Every judge label agrees with the stored coordinates.
  for (const auto& j : res.judge) {
    const auto pred = gre::parse_coordinate(j.answer_coord);
    const bool within = pred && oracle::distance_km(pred->lat(), pred->lon(), j.truth.lat(), j.truth.lon()) <= 25.0;
    CHECK(within == j.label);
  }
  for (const auto& c : res.cot) {
    CHECK(oracle::distance_km(c.answer_coord.lat(), c.answer_coord.lon(), c.truth.lat(), c.truth.lon()) <= 25.0);
    CHECK(c.extra.value("source", "") == "fixture");
  }
  std::set<std::string> reasons;
  for (const auto& r : res.rejects) reasons.insert(r.reason);
  CHECK(reasons == std::set<std::string>{"duplicate-id", "format"});
}

TEST_CASE("truth sampling respects the ratio, the pool and the seed") {
  const auto recs = records_of(fixture::partition_fixture(120, 25.0, 3));
  const auto a = gre::split_generated(recs, {25.0, 0.5, 1});
  const auto b = gre::split_generated(recs, {25.0, 0.5, 1});
  const auto c = gre::split_generated(recs, {25.0, 0.5, 2});
  CHECK(a.counts.judge_truth == static_cast<std::size_t>(std::llround(0.5 * a.counts.judge_false)));
  std::vector<std::string> ia, ib, ic;
  for (const auto& j : a.judge) ia.push_back(j.id);
  for (const auto& j : b.judge) ib.push_back(j.id);
  for (const auto& j : c.judge) ic.push_back(j.id);
  CHECK(ia == ib);
  CHECK(ia != ic);
  for (std::size_t i = a.counts.judge_false; i < a.judge.size(); ++i) {
    CHECK(a.judge[i].label);
    CHECK(a.judge[i].extra.value("truth_copy", false));
  }
  const auto big = gre::split_generated(recs, {25.0, 100.0, 1});
  CHECK(big.counts.judge_truth == big.counts.cot);
  const auto none = gre::split_generated(recs, {25.0, 0.0, 1});
  CHECK(none.counts.judge_truth == 0);
  CHECK_THROWS_AS(gre::split_generated(recs, {0.0, 1.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(gre::split_generated(recs, {25.0, -1.0, 1}), std::invalid_argument);
}

TEST_CASE("examples: one within, one beyond, one malformed") {
  std::vector<gre::GeneratedRecord> recs(3);
  recs[0] = {"a", "i", "<think>t</think><answer>(48.8584, 2.2945)</answer>", {48.86, 2.30}, json::object()};
  recs[1] = {"b", "i", "<think>t</think><answer>(40.0, 2.0)</answer>", {48.86, 2.30}, json::object()};
  recs[2] = {"c", "i", "<answer>(48.8584, 2.2945)</answer>", {48.86, 2.30}, json::object()};
  const auto res = gre::split_generated(recs, {25.0, 1.0, 0});
  CHECK(res.counts.cot == 1);
  CHECK(res.counts.judge_false == 1);
  CHECK(res.counts.rejects == 1);
  CHECK(res.rejects[0].id == "c");
  CHECK(res.rejects[0].reason == "format");
  CHECK(res.judge[0].id == "b");
  CHECK_FALSE(res.judge[0].label);
}

TEST_CASE("record JSON round-trips and keeps unknown fields") {
  const json line = json::parse(R"({"id":"x1","image_ref":"a.jpg","raw_response":"r","truth":{"lat":1.5,"lon":-2.25},"split_note":{"k":[1,2]}})");
  const auto rec = gre::generated_from_json(line);
  CHECK(rec.extra["split_note"]["k"][1] == 2);
  CHECK(gre::to_json(rec) == line);

  const json judge = json::parse(R"({"id":"j","image_ref":"a","think":"t","answer_coord":"nowhere","truth":{"lat":0,"lon":0},"label":"False","x":1})");
  CHECK(gre::to_json(gre::judge_from_json(judge)) == judge);
  CHECK_THROWS_AS(gre::judge_from_json(json::parse(R"({"id":"j","image_ref":"a","think":"t","answer_coord":"n","truth":{"lat":0,"lon":0},"label":"maybe"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(gre::generated_from_json(json::parse(R"({"id":"x","image_ref":"a","raw_response":"r","truth":{"lat":95,"lon":0}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(gre::generated_from_json(json::parse(R"({"id":"","image_ref":"a","raw_response":"r","truth":{"lat":5,"lon":0}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(gre::generated_from_json(json::parse("[1,2]")), std::invalid_argument);
}

TEST_CASE("load_generated turns bad lines into rejects") {
  const fs::path dir = temp_dir("load");
  {
    std::ofstream f(dir / "in.jsonl");
    f << R"({"id":"a","image_ref":"i","raw_response":"r","truth":{"lat":1,"lon":2}})" << "\r\n";
    f << "\n";
    f << "{not json\n";
    f << R"({"id":"b","image_ref":"i","truth":{"lat":1,"lon":2}})" << "\n";
  }
  const auto loaded = gre::load_generated(dir / "in.jsonl");
  CHECK(loaded.records.size() == 1);
  REQUIRE(loaded.rejects.size() == 2);
  CHECK(loaded.rejects[0].reason == "json");
  CHECK(loaded.rejects[0].line == 3);
  CHECK(loaded.rejects[1].reason == "schema");
  CHECK(loaded.rejects[1].id == "b");
  CHECK_THROWS_AS(gre::load_generated(dir / "missing.jsonl"), gre::IoError);
  fs::remove_all(dir);
}

TEST_CASE("sample_split is seeded, sized by ceiling and order independent") {
  auto recs = records_of(fixture::partition_fixture(100, 25.0, 9));
  recs.erase(std::remove_if(recs.begin(), recs.end(), [&, seen = std::set<std::string>()](const auto& r) mutable {
               return !seen.insert(r.id).second;
             }),
             recs.end());
  const std::size_t n = recs.size();
  for (double f : {0.01, 0.07, 0.1, 0.5, 1.0}) {
    const auto s = gre::sample_split(recs, f, 3);
    CHECK(s.size() == static_cast<std::size_t>(std::ceil(f * n - 1e-9)));
  }
  const auto a = gre::sample_split(recs, 0.3, 3);
  std::reverse(recs.begin(), recs.end());
  const auto b = gre::sample_split(recs, 0.3, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
  CHECK(gre::sample_split(recs, 0.3, 4)[0].id != a[0].id);
  CHECK_THROWS_AS(gre::sample_split(recs, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gre::sample_split(recs, 1.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(gre::sample_split({}, 0.5, 1), std::invalid_argument);
}

TEST_CASE("seeded permutation is a permutation and platform-stable") {
  const auto p = gre::seeded_permutation(50, 123);
  std::vector<std::size_t> sorted(p);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  CHECK(p == gre::seeded_permutation(50, 123));
  // Pinned: mt19937_64 is fully specified, and the bounded draw is hand-written.
  const auto small = gre::seeded_permutation(5, 0);
  CHECK(small == gre::seeded_permutation(5, 0));
  CHECK(gre::seeded_permutation(0, 1).empty());
}

TEST_CASE("validate_file") {
  const fs::path dir = temp_dir("validate");
  const auto items = fixture::partition_fixture(80, 25.0, 4);
  const auto res = gre::split_generated(records_of(items), {25.0, 1.0, 1});
  std::vector<json> judge_rows, cot_rows;
  for (const auto& j : res.judge) judge_rows.push_back(gre::to_json(j));
  for (const auto& c : res.cot) cot_rows.push_back(gre::to_json(c));
  gre::write_jsonl(dir / "judge.jsonl", judge_rows);
  gre::write_jsonl(dir / "cot.jsonl", cot_rows);
  CHECK(gre::validate_file(dir / "judge.jsonl", gre::Schema::judge, 25.0).ok());
  CHECK(gre::validate_file(dir / "cot.jsonl", gre::Schema::cot, 25.0).ok());
  CHECK(gre::validate_file(dir / "cot.jsonl", gre::Schema::cot, 25.0).count == res.cot.size());

  // Flip one label: exactly one mismatch.
  judge_rows[0]["label"] = judge_rows[0]["label"] == "Truth" ? "False" : "Truth";
  judge_rows.push_back(judge_rows[1]);
  gre::write_jsonl(dir / "judge_bad.jsonl", judge_rows);
  const auto rep = gre::validate_file(dir / "judge_bad.jsonl", gre::Schema::judge, 25.0);
  REQUIRE(rep.violations.size() == 2);
  CHECK(rep.violations[0].line == 1);
  CHECK(rep.violations[0].message == "label-distance mismatch");
  CHECK(rep.violations[1].message.find("duplicate id") == 0);
  CHECK(gre::validate_file(dir / "judge_bad.jsonl", gre::Schema::judge).violations.size() == 1);
  CHECK_FALSE(gre::validate_file(dir / "cot.jsonl", gre::Schema::judge).ok());
  CHECK(gre::parse_schema("prediction") == gre::Schema::prediction);
  CHECK_FALSE(gre::parse_schema("other"));
  fs::remove_all(dir);
}
