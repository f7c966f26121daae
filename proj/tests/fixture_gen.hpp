#pragma once

// Synthetic generated-record fixtures whose bucket of every record is known
// by construction.

#include <cstdio>
#include <string>
#include <vector>

#include "gre/datapipe.hpp"
#include "gre/rng.hpp"
#include "oracles.hpp"

namespace fixture {

enum class Bucket { cot, judge_false, reject_format, reject_duplicate };

struct Item {
  gre::GeneratedRecord record;
  Bucket bucket;
  double distance_km = -1.0;  // oracle distance of the rendered answer, -1 when unparseable
};

inline std::string coord_text(double lat, double lon) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%.6f, %.6f)", lat, lon);
  return buf;
}

// theta-relative distances stay at least 5% away from the boundary.
inline std::vector<Item> partition_fixture(std::size_t n, double theta_km, std::uint64_t seed) {
  gre::Rng rng(seed);
  std::vector<Item> items;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    Item it;
    auto& r = it.record;
    r.id = "rec-" + std::to_string(1000 + i);
    r.image_ref = "img/" + std::to_string(i) + ".jpg";
    const double tlat = rng.uniform(-70, 70), tlon = rng.uniform(-180, 180);
    r.truth = gre::GeoCoordinate(tlat, tlon);
    const std::string think = "The signage and vegetation suggest region " + std::to_string(i % 13) + ".";
    const std::uint64_t kind = rng.below(20);
    if (kind < 8) {
      double lat = 0, lon = 0;
      oracle::destination(tlat, tlon, rng.uniform(0, 360), theta_km * rng.uniform(0.0, 0.95), lat, lon);
      r.raw_response = "<think>" + think + "</think><answer>" + coord_text(lat, lon) + "</answer>";
      double plat = 0, plon = 0;
      std::sscanf(coord_text(lat, lon).c_str(), "(%lf, %lf)", &plat, &plon);
      it.distance_km = oracle::distance_km(plat, plon, tlat, tlon);
      it.bucket = Bucket::cot;
    } else if (kind < 15) {
      double lat = 0, lon = 0;
      oracle::destination(tlat, tlon, rng.uniform(0, 360), theta_km * rng.uniform(1.05, 400.0), lat, lon);
      r.raw_response = "\n<think>" + think + "</think>\n<answer> " + coord_text(lat, lon) + " </answer>";
      double plat = 0, plon = 0;
      std::sscanf(coord_text(lat, lon).c_str(), "(%lf, %lf)", &plat, &plon);
      it.distance_km = oracle::distance_km(plat, plon, tlat, tlon);
      it.bucket = Bucket::judge_false;
    } else if (kind < 17) {
      r.raw_response = "<think>" + think + "</think><answer>somewhere near a lake</answer>";
      it.bucket = Bucket::judge_false;
    } else if (kind < 19) {
      static const char* broken[] = {
          "<think>x</think>", "<answer>(1, 2)</answer><think>x</think>",
          "<think>x</think><answer>   </answer>", "<think>a</think><think>b</think><answer>(1, 2)</answer>",
          "no tags at all (10, 20)"};
      r.raw_response = broken[rng.below(5)];
      it.bucket = Bucket::reject_format;
    } else {
      if (ids.empty()) {
        r.raw_response = "<think>x</think>";
        it.bucket = Bucket::reject_format;
      } else {
        r.id = ids[rng.below(ids.size())];
        r.raw_response = "<think>dup</think><answer>(0, 0)</answer>";
        it.bucket = Bucket::reject_duplicate;
      }
    }
    if (it.bucket != Bucket::reject_duplicate) ids.push_back(r.id);
    r.extra["source"] = "fixture";
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace fixture
