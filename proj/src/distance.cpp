#include "geoproto/distance.hpp"

#include <cmath>
#include <string>

#include "geoproto/error.hpp"

namespace geoproto {

GeoPoint GeoPoint::from_degrees(double lat_deg, double lon_deg) {
  return {lat_deg * kDegToRad, lon_deg * kDegToRad};
}

SpatialPoint SpatialPoint::from_radians(double lat, double lon) {
  SpatialPoint p;
  p.geo = {lat, lon};
  const double cl = std::cos(lat);
  p.unit = {cl * std::cos(lon), cl * std::sin(lon), std::sin(lat)};
  return p;
}

void Weights::validate() const {
  if (!std::isfinite(lambda1) || lambda1 < 0.0) {
    throw ValidationError("lambda1 must be finite and non-negative");
  }
  if (!std::isfinite(lambda2) || lambda2 < 0.0) {
    throw ValidationError("lambda2 must be finite and non-negative");
  }
}

std::size_t simple_matching(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  if (a.size() != b.size()) {
    throw ValidationError("simple_matching: length mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  std::size_t mismatches = 0;
  for (std::size_t j = 0; j < a.size(); ++j) mismatches += a[j] != b[j];
  return mismatches;
}

double central_angle(const GeoPoint& p_in, const GeoPoint& q_in) {
  if (std::isnan(p_in.lat) || std::isnan(p_in.lon) || std::isnan(q_in.lat) || std::isnan(q_in.lon)) {
    throw ValidationError("geodetic distance: NaN coordinate");
  }
  // The formula is not symmetric in rounding; a fixed argument order makes
  // d(p, q) == d(q, p) exactly.
  const bool swap = q_in.lat < p_in.lat || (q_in.lat == p_in.lat && q_in.lon < p_in.lon);
  const GeoPoint& p = swap ? q_in : p_in;
  const GeoPoint& q = swap ? p_in : q_in;
  const double dlon = q.lon - p.lon;
  const double sp = std::sin(p.lat), cp = std::cos(p.lat);
  const double sq = std::sin(q.lat), cq = std::cos(q.lat);
  const double sd = std::sin(dlon), cd = std::cos(dlon);
  const double a = cq * sd;
  const double b = cp * sq - sp * cq * cd;
  const double y = std::sqrt(a * a + b * b);
  const double x = sp * sq + cp * cq * cd;
  return std::atan2(y, x);
}

double geodetic_distance_m(const GeoPoint& p, const GeoPoint& q, const EarthModel& earth) {
  return earth.effective_radius_m() * central_angle(p, q);
}

DistanceComponents mixed_distance_components(const MixedPoint& x, const MixedPoint& z,
                                             const Weights& w, const EarthModel& earth) {
  if (x.numerical.size() != z.numerical.size()) {
    throw ValidationError("mixed_distance: numerical arity mismatch");
  }
  if (x.spatial.has_value() != z.spatial.has_value()) {
    throw ValidationError("mixed_distance: one point lacks a location");
  }
  DistanceComponents d;
  for (std::size_t j = 0; j < x.numerical.size(); ++j) {
    const double diff = x.numerical[j] - z.numerical[j];
    d.numerical += diff * diff;
  }
  d.categorical = w.lambda1 * static_cast<double>(simple_matching(x.categorical, z.categorical));
  if (x.spatial) d.spatial = w.lambda2 * geodetic_distance_m(x.spatial->geo, z.spatial->geo, earth);
  return d;
}

}  // namespace geoproto
