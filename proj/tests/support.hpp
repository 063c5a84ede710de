#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "geoproto/distance.hpp"
#include "geoproto/random.hpp"
#include "geoproto/schema.hpp"

namespace testing {

struct RandomShape {
  std::size_t n = 100;
  std::size_t numerical = 2;
  std::size_t categorical = 2;
  std::size_t levels = 3;
  bool spatial = true;
  // Coordinates drawn from a small grid so exact repeats occur.
  bool coarse_coordinates = false;
};

inline geoproto::Dataset random_dataset(const RandomShape& s, geoproto::Seed seed) {
  using namespace geoproto;
  Rng rng(seed);
  std::vector<AttributeDescriptor> attrs;
  for (std::size_t j = 0; j < s.numerical; ++j) {
    attrs.push_back(AttributeDescriptor::numerical("x" + std::to_string(j)));
  }
  std::vector<std::string> levels;
  for (std::size_t l = 0; l < s.levels; ++l) levels.push_back("L" + std::to_string(l));
  for (std::size_t j = 0; j < s.categorical; ++j) {
    attrs.push_back(AttributeDescriptor::categorical("c" + std::to_string(j), levels));
  }
  if (s.spatial) attrs.push_back(AttributeDescriptor::spatial("loc", "lat", "lon"));

  DatasetColumns cols;
  cols.numerical_raw.assign(s.numerical, std::vector<double>(s.n));
  cols.categorical.assign(s.categorical, std::vector<std::int32_t>(s.n));
  for (std::size_t i = 0; i < s.n; ++i) {
    for (auto& c : cols.numerical_raw) c[i] = rng.uniform(-50.0, 150.0);
    for (auto& c : cols.categorical) c[i] = static_cast<std::int32_t>(rng.below(s.levels));
    if (s.spatial) {
      if (s.coarse_coordinates) {
        cols.latitude_deg.push_back(30.0 + static_cast<double>(rng.below(4)));
        cols.longitude_deg.push_back(-100.0 + static_cast<double>(rng.below(4)));
      } else {
        cols.latitude_deg.push_back(rng.uniform(25.0, 49.0));
        cols.longitude_deg.push_back(rng.uniform(-124.0, -67.0));
      }
    }
    cols.ids.push_back(std::to_string(i + 1));
  }
  return Dataset::build(std::make_shared<const Schema>(attrs), std::move(cols));
}

// Textbook haversine on a sphere of the given radius.
inline double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg,
                          double radius) {
  const double d2r = 3.14159265358979323846 / 180.0;
  const double p1 = lat1_deg * d2r, p2 = lat2_deg * d2r;
  const double dp = p2 - p1, dl = (lon2_deg - lon1_deg) * d2r;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * radius * std::asin(std::min(1.0, std::sqrt(a)));
}

inline constexpr double kRadius = 6378137.0 * (1.0 - 1.0 / 298.257223563);

// Direct evaluation of the mixed dissimilarity, written without library helpers.
inline double oracle_distance(const geoproto::MixedPoint& x, const geoproto::MixedPoint& z,
                              double lambda1, double lambda2) {
  double num = 0.0;
  for (std::size_t j = 0; j < x.numerical.size(); ++j) {
    num += (x.numerical[j] - z.numerical[j]) * (x.numerical[j] - z.numerical[j]);
  }
  double mm = 0.0;
  for (std::size_t j = 0; j < x.categorical.size(); ++j) mm += x.categorical[j] != z.categorical[j];
  double geo = 0.0;
  if (x.spatial && z.spatial) {
    const double r2d = 180.0 / 3.14159265358979323846;
    geo = haversine_m(x.spatial->geo.lat * r2d, x.spatial->geo.lon * r2d,
                      z.spatial->geo.lat * r2d, z.spatial->geo.lon * r2d, kRadius);
  }
  return num + lambda1 * mm + lambda2 * geo;
}

inline bool relative_close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace testing
