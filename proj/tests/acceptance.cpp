// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixture_gen.hpp"
#include "gre/datapipe.hpp"
#include "gre/evalbench.hpp"
#include "gre/geodesy.hpp"
#include "gre/grpo.hpp"
#include "gre/jsonl.hpp"
#include "gre/reward.hpp"
#include "gre/rng.hpp"
#include "gre/scorer.hpp"
#include "gre/toy.hpp"
#include "oracles.hpp"

namespace {

using namespace gre;
using namespace gre::toy;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "first failure: " << what << "; ";
    ok = ok && cond;
  }
};

// ---------------------------------------------------------------- 1

void reward_closed_forms(Outcome& o) {
  const double theta = 25.0;
  const double expect[3] = {1.0, 0.537883, 0.238406};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double got = geo_reward_from_distance(k * theta, theta);
    worst = std::max(worst, std::abs(got - expect[k]));
  }
  o.require(worst <= 1e-6, "geo_reward closed forms");
  for (bool p : {false, true}) {
    for (bool t : {false, true}) o.require(binary_accuracy_reward(p, t) == (p == t ? 1.0 : 0.0), "truth table");
  }
  o.detail << "max closed-form error " << worst << ", truth table 4/4";
}

// ---------------------------------------------------------------- 2

void geodesic_oracle(Outcome& o) {
  constexpr double R = 6371.0088;
  constexpr double deg = std::numbers::pi / 180.0;
  struct Pair {
    double lat1, lon1, lat2, lon2, km;
  };
  // Arcs along the equator or a meridian have length R * angle.
  const std::vector<Pair> hand{
      {0, 0, 0, 1, R * deg},
      {0, 0, 0, 90, R * 90 * deg},
      {0, -45, 0, 45, R * 90 * deg},
      {0, 10, 0, -170, R * 180 * deg},
      {0, 179, 0, -179, R * 2 * deg},
      {0, -179.5, 0, 179.5, R * 1 * deg},
      {0, 180, 0, -180, 0.0},
      {0, 0, 1, 0, R * deg},
      {-30, 20, 60, 20, R * 90 * deg},
      {89, 0, 90, 0, R * deg},
      {-90, 0, 90, 0, R * 180 * deg},
      {10, 45, -10, 45, R * 20 * deg},
      {45, 0, 45, 180, R * 90 * deg},
      {60, 100, 60, -80, R * 60 * deg},
      {0, 0, 0, 180, R * 180 * deg},
      {30, 40, -30, -140, R * 180 * deg},
      {-45, 170, 45, -10, R * 180 * deg},
      {0, 0, 0, 0, 0.0},
      {12.5, -170, 12.5, -170, 0.0},
      {-89, 90, -89, -90, R * 2 * deg},
  };
  double worst = 0.0;
  for (const auto& p : hand) {
    const double got = geodesic_distance_km(GeoCoordinate(p.lat1, p.lon1), GeoCoordinate(p.lat2, p.lon2));
    const double ref = oracle::distance_km(p.lat1, p.lon1, p.lat2, p.lon2);
    worst = std::max({worst, std::abs(got - p.km), std::abs(ref - p.km)});
  }
  o.require(hand.size() == 20 && worst <= 1e-3, "hand pairs");

  Rng rng(2024);
  std::size_t violations = 0;
  double oracle_worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const GeoCoordinate a(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const GeoCoordinate b(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const GeoCoordinate c(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const double ab = geodesic_distance_km(a, b), ba = geodesic_distance_km(b, a);
    const double bc = geodesic_distance_km(b, c), ac = geodesic_distance_km(a, c);
    if (ab != ba) ++violations;
    if (ac > ab + bc + 1e-6) ++violations;
    oracle_worst = std::max(oracle_worst, std::abs(ab - oracle::distance_km(a.lat(), a.lon(), b.lat(), b.lon())));
  }
  o.require(violations == 0, "symmetry/triangle");
  o.require(oracle_worst <= 1e-3, "random pairs vs oracle");
  o.detail << "20 hand pairs max error " << worst << " km; 10000 random triples, " << violations
           << " violations, max oracle error " << oracle_worst << " km";
}

// ---------------------------------------------------------------- 3

void gradient_check(Outcome& o) {
  Rng rng(99);
  const ToyEnvironment judge = make_judge_env(6, 25, 5);
  const std::vector<std::size_t> cells{0, 14, 35};
  const ToyEnvironment geo = make_geo_grid_env(GeoGrid{}, cells);
  const std::size_t groups[3] = {2, 4, 8};
  const double eps[2] = {0.1, 0.2};
  const double betas[2] = {0.0, 0.04};
  double worst = 0.0;
  std::size_t resampled = 0;
  for (int c = 0; c < 50; ++c) {
    const ToyEnvironment& env = c % 2 == 0 ? judge : geo;
    const std::size_t G = groups[c % 3];
    const GrpoConfig cfg{eps[(c / 3) % 2], betas[(c / 6) % 2], 1e-8};
    const auto& prompt = env.instances[rng.below(env.instances.size())].features;

    ToyPolicy p = make_uniform_policy(env);
    for (double& w : p.params()) w = rng.uniform(-2, 2);
    ToyPolicy ref = p;
    for (double& w : ref.params()) w += rng.uniform(-0.5, 0.5);
    FrozenGroup f;
    // Keep every ratio away from the clip kinks, where the loss has no derivative.
    for (;;) {
      ToyPolicy old = p;
      for (double& w : old.params()) w += rng.uniform(-0.3, 0.3);
      const auto s = sample_rollouts(old, prompt, G, rng, &ref);
      f = FrozenGroup{prompt, s.tokens, {}, {}, {}};
      bool near_kink = false;
      for (std::size_t i = 0; i < G; ++i) {
        f.logp_old.push_back(s.group.rollouts[i].logp_old);
        f.logp_ref.push_back(s.group.rollouts[i].logp_ref);
        f.rewards.push_back(rng.uniform(0, 2));
        const auto now = p.sequence_log_probs(prompt, s.tokens[i]);
        for (std::size_t t = 0; t < now.size(); ++t) {
          const double r = std::exp(now[t] - f.logp_old[i][t]);
          near_kink = near_kink || std::abs(r - (1 - cfg.clip_epsilon)) < 1e-3 ||
                      std::abs(r - (1 + cfg.clip_epsilon)) < 1e-3;
        }
      }
      if (!near_kink) break;
      ++resampled;
    }

    const PolicyGradient pg = policy_loss_and_gradient(p, f, cfg);
    ToyPolicy probe = p;
    for (std::size_t k = 0; k < pg.grad.size(); ++k) {
      const double keep = probe.params()[k];
      probe.params()[k] = keep + 1e-5;
      const double up = policy_loss_and_gradient(probe, f, cfg).loss.loss;
      probe.params()[k] = keep - 1e-5;
      const double down = policy_loss_and_gradient(probe, f, cfg).loss.loss;
      probe.params()[k] = keep;
      const double fd = (up - down) / 2e-5;
      const double rel = std::abs(fd - pg.grad[k]) / std::max({std::abs(fd), std::abs(pg.grad[k]), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  o.require(worst < 1e-4, "relative error");
  o.detail << "50 configurations, max relative error " << worst << " (" << resampled
           << " kink-adjacent draws resampled)";
}

// ---------------------------------------------------------------- 4

void advantage_properties(Outcome& o) {
  Rng rng(5);
  double shift_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(2 + rng.below(15));
    for (double& x : r) x = rng.uniform(-3, 3);
    const double c = rng.uniform(-10, 10);
    std::vector<double> s = r;
    for (double& x : s) x += c;
    const auto a = group_advantages(r, 1e-8), b = group_advantages(s, 1e-8);
    for (std::size_t k = 0; k < a.size(); ++k) shift_worst = std::max(shift_worst, std::abs(a[k] - b[k]));
  }
  o.require(shift_worst <= 1e-9, "shift invariance");
  bool zeros = true;
  for (double v : {0.0, 1.0, -2.5, 1e6}) {
    const std::vector<double> same(8, v);
    for (double a : group_advantages(same, 1e-8)) zeros = zeros && a == 0.0;
  }
  o.require(zeros, "zero-variance group");
  const std::vector<double> ex{1, 0, 0, 1};
  const auto a = group_advantages(ex, 1e-8);
  const double expect[4] = {1, -1, -1, 1};
  double ex_worst = 0.0;
  for (int k = 0; k < 4; ++k) ex_worst = std::max(ex_worst, std::abs(a[k] - expect[k]));
  o.require(ex_worst <= 1e-6, "[1,0,0,1] example");
  o.detail << "shift max diff " << shift_worst << ", zero-variance exact, example max error " << ex_worst;
}

// ---------------------------------------------------------------- 5

double window_mean(const std::vector<StepStats>& curve, bool last) {
  const std::size_t w = std::min<std::size_t>(50, curve.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w; ++i) s += curve[last ? curve.size() - w + i : i].mean_reward;
  return s / static_cast<double>(w);
}

void toy_training(Outcome& o) {
  const GrpoConfig grpo{};
  const RewardConfig reward{};
  TrainOptions defaults{};
  defaults.steps = 500;
  int judge_up = 0, geo_up = 0, geo_modal = 0;
  std::ostringstream runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainOptions opts = defaults;
    opts.seed = seed;
    // One truth cell per run, drawn rather than picked.
    const std::vector<std::size_t> cells{static_cast<std::size_t>(Rng(1000 + seed).below(36))};
    o.require(opts.steps <= 500, "step budget");

    const ToyEnvironment judge = make_judge_env(16, reward.theta_km, seed);
    const auto j = train_stage(judge, make_cold_start_policy(judge), grpo, reward, opts);
    const double j0 = window_mean(j.curve, false), j1 = window_mean(j.curve, true);
    judge_up += j1 > j0;

    const ToyEnvironment geo = make_geo_grid_env(GeoGrid{}, cells);
    const auto g = train_stage(geo, make_cold_start_policy(geo), grpo, reward, opts);
    const double g0 = window_mean(g.curve, false), g1 = window_mean(g.curve, true);
    geo_up += g1 > g0;
    bool all_cells = true;
    for (std::size_t i = 0; i < geo.instances.size(); ++i) {
      const std::string text = geo.vocab.text[modal_answer(g.policy, geo, i)];
      const auto pred = parse_coordinate(text);
      all_cells = all_cells && pred && *pred == std::get<GeoCoordinate>(geo.instances[i].truth);
    }
    geo_modal += all_cells;
    runs << (seed == 1 ? " " : "; ") << "seed " << seed << " (cell " << cells[0] << "): judge " << j0 << "->" << j1 << ", geo " << g0 << "->" << g1
         << (all_cells ? " modal ok" : " modal wrong");
  }
  o.require(judge_up >= 4, "judge improvement");
  o.require(geo_up >= 4, "geo improvement");
  o.require(geo_modal >= 4, "geo modal convergence");
  o.detail << defaults.steps << " steps each; judge improved " << judge_up << "/5, geo improved " << geo_up
           << "/5, geo modal " << geo_modal << "/5;" << runs.str();
}

// ---------------------------------------------------------------- 6

void partition(Outcome& o) {
  const double theta = 25.0;
  const auto items = fixture::partition_fixture(200, theta, 4242);
  std::vector<GeneratedRecord> records;
  for (const auto& it : items) records.push_back(it.record);
  const SplitResult split = split_generated(records, {theta, 1.0, 7});

  std::size_t cot = 0, judge_false = 0, rejects = 0;
  for (const auto& it : items) {
    if (it.bucket == fixture::Bucket::cot) ++cot;
    if (it.bucket == fixture::Bucket::judge_false) ++judge_false;
    if (it.bucket == fixture::Bucket::reject_format || it.bucket == fixture::Bucket::reject_duplicate) ++rejects;
  }
  // Independent re-count from the distances recorded at construction.
  std::size_t cot_bf = 0, false_bf = 0;
  for (const auto& it : items) {
    if (it.bucket == fixture::Bucket::reject_format || it.bucket == fixture::Bucket::reject_duplicate) continue;
    if (it.distance_km >= 0 && it.distance_km <= theta) ++cot_bf; else ++false_bf;
  }
  o.require(cot == cot_bf && judge_false == false_bf, "fixture self-consistency");
  o.require(split.counts.input == 200, "input count");
  o.require(split.counts.cot == cot && split.cot.size() == cot, "cot count");
  o.require(split.counts.judge_false == judge_false, "judge false count");
  o.require(split.counts.judge_truth == std::min(cot, judge_false), "truth copies");
  o.require(split.counts.rejects == rejects && split.rejects.size() == rejects, "reject count");

  std::size_t sound = 0;
  for (const auto& j : split.judge) {
    double lat = 0, lon = 0;
    bool within = false;
    if (std::sscanf(j.answer_coord.c_str(), " (%lf, %lf)", &lat, &lon) == 2) {
      within = oracle::distance_km(lat, lon, j.truth.lat(), j.truth.lon()) <= theta;
    }
    sound += within == j.label;
  }
  o.require(sound == split.judge.size(), "label soundness");
  o.detail << "cot " << split.counts.cot << ", judge false " << split.counts.judge_false << ", truth "
           << split.counts.judge_truth << ", rejects " << split.counts.rejects << "; labels sound " << sound << "/"
           << split.judge.size();
}

// ---------------------------------------------------------------- 7

void threshold_oracle(Outcome& o) {
  Rng rng(7);
  const auto& t = default_thresholds_km();
  std::vector<PredictionRecord> preds;
  std::vector<double> d;
  std::size_t unparsed = 0;
  for (int i = 0; i < 1000; ++i) {
    PredictionRecord r;
    r.id = std::to_string(i);
    const double tlat = rng.uniform(-70, 70), tlon = rng.uniform(-180, 180);
    r.truth = GeoCoordinate(tlat, tlon);
    if (rng.below(20) == 0) {
      ++unparsed;
      r.pred_raw = "unknown";
    } else {
      double lat = 0, lon = 0;
      oracle::destination(tlat, tlon, rng.uniform(0, 360), std::exp(rng.uniform(-2, 8.5)), lat, lon);
      r.pred = GeoCoordinate(lat, lon);
      d.push_back(oracle::distance_km(lat, lon, tlat, tlon));
    }
    preds.push_back(std::move(r));
  }
  const auto rep = threshold_metrics(preds, t);
  bool exact = rep.n == 1000 && rep.unparsed == unparsed;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const std::size_t bf = oracle::count_within(d, t[k]);
    exact = exact && rep.hits[k] == bf && rep.accuracy_pct[k] == 100.0 * static_cast<double>(bf) / 1000.0;
  }
  o.require(exact, "brute-force agreement");

  std::size_t monotone = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    std::vector<double> dist(1 + rng.below(40));
    for (double& x : dist) x = std::exp(rng.uniform(-2, 9));
    std::vector<double> th(1 + rng.below(8));
    for (double& x : th) x = std::exp(rng.uniform(-2, 9));
    std::sort(th.begin(), th.end());
    th.erase(std::unique(th.begin(), th.end()), th.end());
    const auto r = threshold_metrics_from_distances(dist, rng.below(5), th);
    bool ok = true;
    for (std::size_t k = 1; k < th.size(); ++k) ok = ok && r.accuracy_pct[k] >= r.accuracy_pct[k - 1];
    monotone += ok;
  }
  o.require(monotone == 1000, "monotonicity");
  std::ostringstream hits;
  for (auto h : rep.hits) hits << h << " ";
  o.detail << "hits " << hits.str() << "of 1000 (unparsed " << unparsed << "); monotone " << monotone << "/1000";
}

// ---------------------------------------------------------------- 8

void cot_aggregation(Outcome& o) {
  const std::string dir = GRE_TEST_FIXTURES;
  std::vector<PredictionRecord> preds;
  for (const auto& line : read_jsonl(dir + "/recall1_pred.jsonl")) preds.push_back(prediction_from_json(*line.value));
  CorpusIndex corpus;
  for (const auto& line : read_jsonl(dir + "/recall1_corpus.jsonl")) {
    auto [id, entries] = corpus_entry_from_json(*line.value);
    corpus[id] = entries;
  }
  MockScorer mock(0.8);
  const auto rep = evaluate_cot_batch(preds, corpus, mock);
  o.require(rep.mean.has_value() && rep.errored == 0, "all records scored");
  const double q = rep.mean ? rep.mean->cot_quality : -1.0;
  o.require(rep.mean && rep.mean->recall == 1.0, "recall-1 fixture");
  o.require(std::abs(q - 0.8667) <= 1e-4, "cot_quality");
  o.detail << rep.scored << " records, recall " << (rep.mean ? rep.mean->recall : -1.0) << ", cot_quality " << q;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {"reward-closed-forms", 1, reward_closed_forms},
      {"geodesic-oracle", 5, geodesic_oracle},
      {"grpo-gradient-check", 30, gradient_check},
      {"advantage-properties", 1, advantage_properties},
      {"toy-two-stage-training", 120, toy_training},
      {"datapipe-partition", 5, partition},
      {"threshold-metric-oracle", 5, threshold_oracle},
      {"cot-quality-mock-scorer", 5, cot_aggregation},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.budget_s, "runtime budget");
    std::printf("%s %s (%s; %.3f s of %.0f s)\n", o.ok ? "PASS" : "FAIL", c.name, o.detail.str().c_str(), secs,
                c.budget_s);
    failed += o.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
