#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace geoproto {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// Latitude/longitude in radians.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  static GeoPoint from_degrees(double lat_deg, double lon_deg);
  bool operator==(const GeoPoint&) const = default;
};

/// A coordinate together with its unit vector on the sphere. The unit vector
/// is computed once and copied along with the coordinate, so equal
/// coordinates always carry bit-identical vectors.
struct SpatialPoint {
  GeoPoint geo;
  std::array<double, 3> unit{0.0, 0.0, 1.0};

  static SpatialPoint from_radians(double lat, double lon);
  bool operator==(const SpatialPoint& o) const { return geo == o.geo; }
};

/// WGS84 constants. Distances use the sphere of radius a * (1 - f).
struct EarthModel {
  double equatorial_radius_m = 6378137.0;
  double flattening = 1.0 / 298.257223563;

  constexpr double effective_radius_m() const { return equatorial_radius_m * (1.0 - flattening); }
};

/// Balance weights relative to the numerical (squared Euclidean) term.
/// lambda2 multiplies geodetic distance in meters.
struct Weights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  void validate() const;
};

/// A record or prototype: normalized numerical values, categorical level
/// indices, optional location.
struct MixedPoint {
  std::vector<double> numerical;
  std::vector<std::int32_t> categorical;
  std::optional<SpatialPoint> spatial;
};

/// Number of positions where a and b differ. Throws on length mismatch.
std::size_t simple_matching(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

/// Great-circle distance in meters on the r(1 - f) sphere, from the atan2
/// form of the central angle. Throws on NaN input.
double geodetic_distance_m(const GeoPoint& p, const GeoPoint& q, const EarthModel& earth = {});

/// Central angle (radians) of the atan2 form above.
double central_angle(const GeoPoint& p, const GeoPoint& q);

/// The three weighted terms of the mixed dissimilarity.
struct DistanceComponents {
  double numerical = 0.0;    // sum of squared differences
  double categorical = 0.0;  // lambda1 * mismatches
  double spatial = 0.0;      // lambda2 * meters

  double total() const { return numerical + categorical + spatial; }
};

DistanceComponents mixed_distance_components(const MixedPoint& x, const MixedPoint& z,
                                             const Weights& w, const EarthModel& earth = {});

/// Squared Euclidean + lambda1 * simple matching + lambda2 * geodetic meters.
inline double mixed_distance(const MixedPoint& x, const MixedPoint& z, const Weights& w,
                             const EarthModel& earth = {}) {
  return mixed_distance_components(x, z, w, earth).total();
}

}  // namespace geoproto
