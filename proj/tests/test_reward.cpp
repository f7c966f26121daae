#include <doctest.h>

#include <cmath>

#include "gre/reward.hpp"
#include "gre/rng.hpp"
#include "oracles.hpp"

using gre::RewardConfig;

TEST_CASE("extract_tags") {
  auto t = gre::extract_tags("<think>A</think><answer>B</answer>");
  CHECK(t.think_span == "A");
  CHECK(t.answer_span == "B");

  t = gre::extract_tags("<answer>B</answer><think>A</think>");
  CHECK_FALSE(t.think_span);
  CHECK_FALSE(t.answer_span);

  t = gre::extract_tags("<think>A</think>");
  CHECK(t.think_span == "A");
  CHECK_FALSE(t.answer_span);

  t = gre::extract_tags("<think>A<answer>B</think></answer>");
  CHECK_FALSE(t.think_span);
  CHECK_FALSE(t.answer_span);

  t = gre::extract_tags("<think>A</think><think>C</think><answer>B</answer>");
  CHECK_FALSE(t.think_span);
  CHECK(t.answer_span == "B");

  t = gre::extract_tags("</think>A<think><answer>B</answer>");
  CHECK_FALSE(t.think_span);
}

TEST_CASE("format_reward") {
  CHECK(gre::format_reward(gre::extract_tags("<think>A</think><answer>B</answer>")) == 1.0);
  CHECK(gre::format_reward(gre::extract_tags("<think>A</think>")) == 0.0);
  CHECK(gre::format_reward(gre::extract_tags("<think>A</think><answer>  </answer>")) == 0.0);
  CHECK(gre::format_reward(gre::extract_tags("<think>\n</think><answer>x</answer>")) == 0.0);
  CHECK(gre::format_reward(gre::extract_tags("")) == 0.0);
}

TEST_CASE("format_reward ignores whitespace padding outside the tags") {
  const std::string core = "<think>look</think><answer>(1, 2)</answer>";
  for (const char* pad : {"", " ", "\n\n", "\t \r\n"}) {
    CHECK(gre::format_reward(gre::extract_tags(pad + core + pad)) == 1.0);
  }
  CHECK(gre::format_reward(gre::extract_tags("<think>a</think>  \n <answer>b</answer>")) == 1.0);
}

TEST_CASE("extract_label") {
  for (const char* s : {"true", "True", " TRUTH ", "yes", "Yes\n"}) CHECK(gre::extract_label(s) == true);
  for (const char* s : {"false", "False", " no ", "NO"}) CHECK(gre::extract_label(s) == false);
  for (const char* s : {"", "maybe", "truthy", "y", "0"}) CHECK_FALSE(gre::extract_label(s));
}

TEST_CASE("binary accuracy truth table") {
  CHECK(gre::binary_accuracy_reward(true, true) == 1.0);
  CHECK(gre::binary_accuracy_reward(false, false) == 1.0);
  CHECK(gre::binary_accuracy_reward(true, false) == 0.0);
  CHECK(gre::binary_accuracy_reward(false, true) == 0.0);
}

TEST_CASE("geo reward closed forms") {
  const double theta = 25.0;
  CHECK(gre::geo_reward_from_distance(0.0, theta) == 1.0);
  CHECK(std::abs(gre::geo_reward_from_distance(theta, theta) - 0.537883) < 1e-6);
  CHECK(std::abs(gre::geo_reward_from_distance(2 * theta, theta) - 0.238406) < 1e-6);
  CHECK(gre::geo_reward_from_distance(1e6, theta) >= 0.0);
  CHECK(gre::geo_reward_from_distance(1e6, theta) < 1e-300);
  RewardConfig cfg;
  CHECK(gre::geo_reward(std::nullopt, {0, 0}, cfg) == 0.0);
}

TEST_CASE("geo reward properties") {
  gre::Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double theta = rng.uniform(0.5, 500.0);
    const double d1 = rng.uniform(0.0, 5000.0);
    const double d2 = d1 + rng.uniform(1e-6, 100.0);
    const double r1 = gre::geo_reward_from_distance(d1, theta);
    const double r2 = gre::geo_reward_from_distance(d2, theta);
    CHECK(r1 >= r2);
    // Strict until the reward underflows to zero.
    if (d2 / theta < 700.0) CHECK(r1 > r2);
    CHECK(std::abs(r1 - oracle::geo_reward(d1, theta)) <= 1e-12);
    const double k = rng.uniform(0.01, 100.0);
    const double scaled = gre::geo_reward_from_distance(k * d1, k * theta);
    CHECK(std::abs(scaled - r1) <= 1e-12 * std::max(r1, 1e-300) + 1e-300);
  }
}

TEST_CASE("stage 1 examples") {
  RewardConfig cfg;
  CHECK(gre::stage1_reward("<think>x</think><answer>True</answer>", true, cfg).total == 2.0);
  CHECK(gre::stage1_reward("<think>x</think><answer>False</answer>", true, cfg).total == 1.0);
  CHECK(gre::stage1_reward("True", true, cfg).total == 0.0);
  const auto rb = gre::stage1_reward("<think>x</think><answer>perhaps</answer>", true, cfg);
  CHECK(rb.format == 1.0);
  CHECK(rb.accuracy == 0.0);
}

TEST_CASE("stage 2 examples") {
  RewardConfig cfg;
  const gre::GeoCoordinate truth(48.8584, 2.2945);
  CHECK(gre::stage2_reward("<think>x</think><answer>(48.8584, 2.2945)</answer>", truth, cfg).total == 2.0);
  CHECK(gre::stage2_reward("<think>x</think><answer>nowhere</answer>", truth, cfg).total == 1.0);

  double lat = 0, lon = 0;
  oracle::destination(truth.lat(), truth.lon(), 40.0, cfg.theta_km, lat, lon);
  const std::string text = "<think>x</think><answer>(" + std::to_string(lat) + ", " + std::to_string(lon) + ")</answer>";
  // Six decimals move the point by < 0.1 m; the reward slope is ~0.01 per km.
  CHECK(std::abs(gre::stage2_reward(text, truth, cfg).total - 1.537883) < 1e-5);
}

TEST_CASE("weights and ranges") {
  RewardConfig cfg{25.0, 2.0, 0.5};
  cfg.validate();
  const auto rb = gre::stage1_reward("<think>x</think><answer>yes</answer>", true, cfg);
  CHECK(rb.total == 2.5);
  CHECK(cfg.max_total() == 2.5);
  gre::Rng rng(3);
  const gre::GeoCoordinate truth(10, 10);
  for (int i = 0; i < 500; ++i) {
    const std::string text = "<think>t</think><answer>(" + std::to_string(rng.uniform(-90, 90)) + " " +
                             std::to_string(rng.uniform(-180, 180)) + ")</answer>";
    const double r = gre::stage2_reward(text, truth, cfg).total;
    CHECK(r >= 0.0);
    CHECK(r <= cfg.max_total());
  }
  CHECK_THROWS_AS((RewardConfig{0.0, 1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((RewardConfig{25, -1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((RewardConfig{INFINITY, 1, 1}.validate()), std::invalid_argument);
}
