#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gre {

/// Mean Earth radius (IUGG) used by every distance in the toolkit.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Latitude/longitude in decimal degrees.
///
/// Construction validates the ranges lat in [-90, 90] and lon in [-180, 180]
/// and rejects NaN/Inf; an instance is therefore always a valid position.
class GeoCoordinate {
 public:
  GeoCoordinate() = default;
  GeoCoordinate(double lat, double lon);

  static std::optional<GeoCoordinate> try_make(double lat, double lon) noexcept;

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoCoordinate&, const GeoCoordinate&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

enum class CoordParseError {
  empty,
  syntax,      // unbalanced parentheses, stray characters
  arity,       // not exactly two numbers
  non_numeric,
  out_of_range,
};

std::string_view to_string(CoordParseError e) noexcept;

struct CoordParseResult {
  std::optional<GeoCoordinate> coord;
  CoordParseError error = CoordParseError::empty;

  explicit operator bool() const noexcept { return coord.has_value(); }
};

/// Accepts "(lat, lon)", "lat, lon" and "lat lon" in decimal degrees, with an
/// optional sign on each number and surrounding whitespace. Never throws.
CoordParseResult parse_coordinate_detailed(std::string_view text) noexcept;

inline std::optional<GeoCoordinate> parse_coordinate(std::string_view text) noexcept {
  return parse_coordinate_detailed(text).coord;
}

/// Canonical "(lat, lon)" rendering with six decimals.
std::string format_coordinate(const GeoCoordinate& c);

/// Great-circle (haversine) distance on the sphere of radius kEarthRadiusKm.
/// Symmetric to the last bit; lon = +180 and -180 coincide.
double geodesic_distance_km(const GeoCoordinate& a, const GeoCoordinate& b) noexcept;

/// Pairwise distances a[i] <-> b[i] through the runtime-selected batch kernel.
std::vector<double> geodesic_distances_km(std::span<const GeoCoordinate> a,
                                          std::span<const GeoCoordinate> b);

}  // namespace gre
