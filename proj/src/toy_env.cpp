#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gre/toy.hpp"

namespace gre::toy {

namespace {

constexpr double kRad = std::numbers::pi / 180.0;

// Point at `distance_km` from `origin` along `bearing_deg` on the sphere.
GeoCoordinate destination(const GeoCoordinate& origin, double bearing_deg, double distance_km) {
  const double delta = distance_km / kEarthRadiusKm;
  const double phi1 = origin.lat() * kRad;
  const double lambda1 = origin.lon() * kRad;
  const double bearing = bearing_deg * kRad;
  const double sin_phi2 =
      std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(bearing);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 =
      lambda1 + std::atan2(std::sin(bearing) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * std::sin(phi2));
  double lon = std::remainder(lambda2 / kRad, 360.0);
  if (lon < -180.0) lon += 360.0;
  if (lon > 180.0) lon -= 360.0;
  return GeoCoordinate(std::clamp(phi2 / kRad, -90.0, 90.0), lon);
}

void add_format_tokens(Vocabulary& v) {
  v.add("<think>", TokenRole::think_open);
  v.add("</think>", TokenRole::think_close);
  v.add("<answer>", TokenRole::answer_open);
  v.add("</answer>", TokenRole::answer_close);
  v.add("clue", TokenRole::filler);
  v.add("terrain", TokenRole::filler);
}

}  // namespace

void Vocabulary::add(std::string t, TokenRole r) {
  text.push_back(std::move(t));
  role.push_back(r);
}

std::vector<std::size_t> Vocabulary::with_role(TokenRole r) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < role.size(); ++i) {
    if (role[i] == r) out.push_back(i);
  }
  return out;
}

std::string Vocabulary::render(std::span<const std::size_t> tokens) const {
  std::string out;
  for (std::size_t t : tokens) out += text.at(t);
  return out;
}

void GeoGrid::validate() const {
  if (rows == 0 || cols == 0) throw std::invalid_argument("grid needs at least one row and column");
  if (!(lat_min < lat_max) || !(lon_min < lon_max)) {
    throw std::invalid_argument("grid bounds must be increasing");
  }
  if (!GeoCoordinate::try_make(lat_min, lon_min) || !GeoCoordinate::try_make(lat_max, lon_max)) {
    throw std::invalid_argument("grid bounds outside valid coordinate range");
  }
}

GeoCoordinate GeoGrid::cell_center(std::size_t cell) const {
  if (cell >= cell_count()) throw std::out_of_range("grid cell index out of range");
  const std::size_t r = cell / cols;
  const std::size_t c = cell % cols;
  const double lat = lat_min + (static_cast<double>(r) + 0.5) * (lat_max - lat_min) /
                                   static_cast<double>(rows);
  const double lon = lon_min + (static_cast<double>(c) + 0.5) * (lon_max - lon_min) /
                                   static_cast<double>(cols);
  // Canonical center: whatever the rendered text parses back to.
  return *parse_coordinate(format_coordinate(GeoCoordinate(lat, lon)));
}

std::string GeoGrid::cell_text(std::size_t cell) const {
  return format_coordinate(cell_center(cell));
}

std::optional<std::size_t> GeoGrid::cell_of(const GeoCoordinate& c) const {
  if (c.lat() < lat_min || c.lat() > lat_max || c.lon() < lon_min || c.lon() > lon_max) {
    return std::nullopt;
  }
  const auto index = [](double v, double lo, double hi, std::size_t n) {
    const auto i = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n));
    return std::min(i, n - 1);
  };
  return index(c.lat(), lat_min, lat_max, rows) * cols + index(c.lon(), lon_min, lon_max, cols);
}

std::string_view to_string(EnvKind k) noexcept {
  return k == EnvKind::judge ? "judge" : "geo_grid";
}

std::size_t ToyEnvironment::prompt_dim() const {
  if (instances.empty()) throw std::invalid_argument("no instances");
  return instances.front().features.size();
}

std::vector<std::size_t> ToyEnvironment::answer_tokens() const {
  return vocab.with_role(kind == EnvKind::judge ? TokenRole::label : TokenRole::cell);
}

void ToyEnvironment::validate() const {
  if (instances.empty()) throw std::invalid_argument("no instances");
  const std::size_t dim = instances.front().features.size();
  for (const auto& inst : instances) {
    if (inst.features.size() != dim) throw std::invalid_argument("instance feature widths differ");
    if (kind == EnvKind::judge) {
      if (!std::holds_alternative<bool>(inst.truth)) {
        throw std::invalid_argument("judge instance needs a boolean truth");
      }
    } else {
      if (!grid) throw std::invalid_argument("geo_grid environment needs a grid");
      const auto* truth = std::get_if<GeoCoordinate>(&inst.truth);
      if (truth == nullptr) throw std::invalid_argument("geo_grid instance needs a coordinate truth");
      const auto cell = grid->cell_of(*truth);
      if (!cell || grid->cell_center(*cell) != *truth) {
        throw std::invalid_argument("geo_grid truth must be a lattice cell center");
      }
    }
  }
}

RewardBreakdown ToyEnvironment::reward(std::size_t instance, std::string_view text,
                                       const RewardConfig& cfg) const {
  const auto& truth = instances.at(instance).truth;
  if (kind == EnvKind::judge) return stage1_reward(text, std::get<bool>(truth), cfg);
  return stage2_reward(text, std::get<GeoCoordinate>(truth), cfg);
}

ToyEnvironment make_judge_env(std::size_t n_instances, double theta_km, std::uint64_t seed) {
  if (n_instances < 2) throw std::invalid_argument("judge environment needs at least 2 instances");
  if (!(theta_km > 0.0)) throw std::invalid_argument("theta_km must be > 0");
  ToyEnvironment env;
  env.kind = EnvKind::judge;
  add_format_tokens(env.vocab);
  env.vocab.add("True", TokenRole::label);
  env.vocab.add("False", TokenRole::label);

  Rng rng(seed);
  for (std::size_t i = 0; i < n_instances; ++i) {
    const bool within = (i % 2) == 0;
    const GeoCoordinate truth(rng.uniform(-60.0, 60.0), rng.uniform(-180.0, 180.0));
    const double target = within ? theta_km * rng.uniform(0.05, 0.9)
                                 : theta_km * rng.uniform(1.2, 10.0);
    const GeoCoordinate pred = destination(truth, rng.uniform(0.0, 360.0), target);
    const double d = geodesic_distance_km(pred, truth);
    const double signal = std::clamp(std::log(d / theta_km), -3.0, 3.0) / 3.0;
    env.instances.push_back({{1.0, signal, rng.uniform(-1.0, 1.0)}, d <= theta_km});
  }
  env.validate();
  return env;
}

ToyEnvironment make_geo_grid_env(const GeoGrid& grid, std::span<const std::size_t> truth_cells) {
  grid.validate();
  if (truth_cells.empty()) throw std::invalid_argument("no instances");
  ToyEnvironment env;
  env.kind = EnvKind::geo_grid;
  env.grid = grid;
  add_format_tokens(env.vocab);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) env.vocab.add(grid.cell_text(c), TokenRole::cell);

  for (std::size_t i = 0; i < truth_cells.size(); ++i) {
    std::vector<double> features(truth_cells.size(), 0.0);
    features[i] = 1.0;
    env.instances.push_back({std::move(features), grid.cell_center(truth_cells[i])});
  }
  env.validate();
  return env;
}

}  // namespace gre::toy
