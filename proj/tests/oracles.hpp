#pragma once

// Reference computations for the tests. Deliberately written differently
// from the library (vector geometry instead of haversine, tanh instead of the
// logistic form, long double loops instead of the kernels) so that agreement
// means something.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

inline constexpr long double kRadiusKm = 6371.0088L;

inline long double rad(long double deg) { return deg * std::numbers::pi_v<long double> / 180.0L; }

// Central angle from unit vectors: atan2(|a x b|, a . b). Well conditioned at
// every separation, including antipodes.
inline double distance_km(double lat1, double lon1, double lat2, double lon2) {
  const long double p1 = rad(lat1), l1 = rad(lon1), p2 = rad(lat2), l2 = rad(lon2);
  const long double a[3] = {std::cos(p1) * std::cos(l1), std::cos(p1) * std::sin(l1), std::sin(p1)};
  const long double b[3] = {std::cos(p2) * std::cos(l2), std::cos(p2) * std::sin(l2), std::sin(p2)};
  const long double cx = a[1] * b[2] - a[2] * b[1];
  const long double cy = a[2] * b[0] - a[0] * b[2];
  const long double cz = a[0] * b[1] - a[1] * b[0];
  const long double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const long double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return static_cast<double>(kRadiusKm * std::atan2(cross, dot));
}

// Destination after travelling `km` from (lat, lon) on initial bearing `deg`,
// by rotating the start vector about the axis perpendicular to the path.
inline void destination(double lat, double lon, double bearing_deg, double km, double& out_lat,
                        double& out_lon) {
  const long double p = rad(lat), l = rad(lon), th = rad(bearing_deg);
  const long double delta = km / kRadiusKm;
  // Local east/north unit vectors.
  const long double up[3] = {std::cos(p) * std::cos(l), std::cos(p) * std::sin(l), std::sin(p)};
  const long double east[3] = {-std::sin(l), std::cos(l), 0.0L};
  const long double north[3] = {-std::sin(p) * std::cos(l), -std::sin(p) * std::sin(l), std::cos(p)};
  long double dir[3], v[3];
  for (int i = 0; i < 3; ++i) dir[i] = std::cos(th) * north[i] + std::sin(th) * east[i];
  for (int i = 0; i < 3; ++i) v[i] = std::cos(delta) * up[i] + std::sin(delta) * dir[i];
  out_lat = static_cast<double>(std::asin(std::clamp(v[2], -1.0L, 1.0L)) * 180.0L /
                                std::numbers::pi_v<long double>);
  out_lon = static_cast<double>(std::atan2(v[1], v[0]) * 180.0L / std::numbers::pi_v<long double>);
}

// 2 / (1 + e^x) == 1 - tanh(x / 2)
inline double geo_reward(double d_km, double theta_km) {
  return static_cast<double>(1.0L - std::tanh(static_cast<long double>(d_km) / (2.0L * theta_km)));
}

inline std::vector<double> advantages(std::span<const double> r, double floor) {
  long double sum = 0.0L;
  for (double x : r) sum += x;
  const long double mean = sum / r.size();
  long double ss = 0.0L;
  for (double x : r) ss += (x - mean) * (x - mean);
  const long double sd = std::sqrt(ss / r.size());
  std::vector<double> out;
  for (double x : r) out.push_back(sd == 0.0L ? 0.0 : static_cast<double>((x - mean) / (sd + floor)));
  return out;
}

// Linear softmax policy with the library's parameter layout: row-major
// (prompt_dim + max_len) x vocab, logits at position t = [prompt, onehot(t)] . W.
inline std::vector<long double> log_probs(std::span<const double> params, std::size_t vocab,
                                          std::span<const double> prompt, std::size_t pos) {
  std::vector<long double> z(vocab, 0.0L);
  for (std::size_t k = 0; k < vocab; ++k) {
    long double acc = params[(prompt.size() + pos) * vocab + k];
    for (std::size_t f = 0; f < prompt.size(); ++f) acc += prompt[f] * params[f * vocab + k];
    z[k] = acc;
  }
  long double total = 0.0L;
  for (long double v : z) total += std::exp(v);
  for (auto& v : z) v -= std::log(total);
  return z;
}

struct Frozen {
  std::vector<double> prompt;
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<std::vector<double>> logp_old;
  std::vector<std::vector<double>> logp_ref;
  std::vector<double> rewards;
};

// -(1/T) sum [min(r A, clip(r) A) - beta (e^{q-p} - (q-p) - 1)], evaluated naively.
inline long double grpo_loss(std::span<const double> params, std::size_t vocab, const Frozen& g,
                             double eps, double beta) {
  const std::vector<double> adv = advantages(g.rewards, 1e-8);
  long double total = 0.0L;
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.tokens.size(); ++i) {
    for (std::size_t t = 0; t < g.tokens[i].size(); ++t) {
      const long double p = log_probs(params, vocab, g.prompt, t)[g.tokens[i][t]];
      const long double ratio = std::exp(p - g.logp_old[i][t]);
      const long double lo = 1.0L - eps, hi = 1.0L + eps;
      const long double clipped = ratio < lo ? lo : (ratio > hi ? hi : ratio);
      const long double surrogate = std::min(ratio * adv[i], clipped * adv[i]);
      const long double x = g.logp_ref[i][t] - p;
      const long double k3 = std::exp(x) - x - 1.0L;
      total += surrogate - beta * k3;
      ++count;
    }
  }
  return -total / count;
}

// Number of distances <= t, by direct scan.
inline std::size_t count_within(std::span<const double> d, double t) {
  std::size_t n = 0;
  for (double x : d) n += (x <= t) ? 1 : 0;
  return n;
}

}  // namespace oracle
