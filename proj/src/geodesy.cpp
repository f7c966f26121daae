#include "gre/geodesy.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "gre/kernels.hpp"

namespace gre {

namespace {

bool in_range(double lat, double lon) noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Full-consume decimal parse. from_chars rejects a leading '+', so strip it here.
std::optional<double> parse_number(std::string_view s) noexcept {
  if (s.empty()) return std::nullopt;
  std::string_view body = s;
  if (body.front() == '+') {
    body.remove_prefix(1);
    if (body.empty() || body.front() == '-' || body.front() == '+') return std::nullopt;
  }
  double value = 0.0;
  const char* first = body.data();
  const char* last = body.data() + body.size();
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

GeoCoordinate::GeoCoordinate(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!in_range(lat, lon)) {
    throw std::invalid_argument("coordinate out of range: lat must be in [-90, 90] and lon in "
                                "[-180, 180], both finite");
  }
}

std::optional<GeoCoordinate> GeoCoordinate::try_make(double lat, double lon) noexcept {
  if (!in_range(lat, lon)) return std::nullopt;
  return GeoCoordinate(lat, lon);
}

std::string_view to_string(CoordParseError e) noexcept {
  switch (e) {
    case CoordParseError::empty: return "empty";
    case CoordParseError::syntax: return "syntax";
    case CoordParseError::arity: return "arity";
    case CoordParseError::non_numeric: return "non-numeric";
    case CoordParseError::out_of_range: return "out-of-range";
  }
  return "unknown";
}

CoordParseResult parse_coordinate_detailed(std::string_view text) noexcept {
  CoordParseResult result;
  std::string_view s = trim(text);
  if (s.empty()) {
    result.error = CoordParseError::empty;
    return result;
  }
  const bool open = s.front() == '(';
  const bool close = s.back() == ')';
  if (open != close) {
    result.error = CoordParseError::syntax;
    return result;
  }
  if (open) {
    s = trim(s.substr(1, s.size() - 2));
    if (s.empty()) {
      result.error = CoordParseError::empty;
      return result;
    }
  }

  std::array<std::string_view, 2> parts;
  const auto commas = std::count(s.begin(), s.end(), ',');
  if (commas > 1) {
    result.error = CoordParseError::arity;
    return result;
  }
  if (commas == 1) {
    const auto pos = s.find(',');
    parts[0] = trim(s.substr(0, pos));
    parts[1] = trim(s.substr(pos + 1));
    if (parts[0].empty() || parts[1].empty()) {
      result.error = CoordParseError::arity;
      return result;
    }
    for (auto p : parts) {
      if (std::any_of(p.begin(), p.end(), is_space)) {
        result.error = CoordParseError::arity;
        return result;
      }
    }
  } else {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space(s[i])) ++i;
      if (i >= s.size()) break;
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j])) ++j;
      if (count < 2) parts[count] = s.substr(i, j - i);
      ++count;
      i = j;
    }
    if (count != 2) {
      result.error = CoordParseError::arity;
      return result;
    }
  }

  const auto lat = parse_number(parts[0]);
  const auto lon = parse_number(parts[1]);
  if (!lat || !lon) {
    result.error = CoordParseError::non_numeric;
    return result;
  }
  result.coord = GeoCoordinate::try_make(*lat, *lon);
  if (!result.coord) result.error = CoordParseError::out_of_range;
  return result;
}

std::string format_coordinate(const GeoCoordinate& c) {
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "(%.6f, %.6f)", c.lat(), c.lon());
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

double geodesic_distance_km(const GeoCoordinate& a, const GeoCoordinate& b) noexcept {
  constexpr double to_rad = std::numbers::pi / 180.0;
  double dlon = b.lon() - a.lon();
  if (dlon > 180.0) {
    dlon -= 360.0;
  } else if (dlon < -180.0) {
    dlon += 360.0;
  }
  const double dlat = b.lat() - a.lat();
  const double s_lat = std::sin(0.5 * dlat * to_rad);
  const double s_lon = std::sin(0.5 * dlon * to_rad);
  const double cos_prod = std::cos(a.lat() * to_rad) * std::cos(b.lat() * to_rad);
  const double h = std::clamp(s_lat * s_lat + cos_prod * (s_lon * s_lon), 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::vector<double> geodesic_distances_km(std::span<const GeoCoordinate> a,
                                          std::span<const GeoCoordinate> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("geodesic_distances_km: input spans differ in length");
  }
  const std::size_t n = a.size();
  std::vector<double> lat_a(n), lon_a(n), lat_b(n), lon_b(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    lat_a[i] = a[i].lat();
    lon_a[i] = a[i].lon();
    lat_b[i] = b[i].lat();
    lon_b[i] = b[i].lon();
  }
  kernels::haversine_km(lat_a, lon_a, lat_b, lon_b, out);
  return out;
}

}  // namespace gre
