#include "geoproto/lambda.hpp"

#include <cmath>
#include <vector>

#include "geoproto/error.hpp"
#include "geoproto/numeric.hpp"

namespace geoproto {

namespace {

double sample_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double mean = compensated_sum(xs) / static_cast<double>(n);
  CompensatedSum ss;
  for (double x : xs) ss.add((x - mean) * (x - mean));
  return ss.value() / static_cast<double>(n - 1);
}

}  // namespace

double numerical_average_variance(const Dataset& data) {
  const std::size_t d1 = data.schema().numerical_count();
  if (d1 == 0) throw ValidationError("lambda estimation needs at least one numerical attribute");
  if (data.size() < 2) throw ValidationError("lambda estimation needs at least two records");
  CompensatedSum total;
  for (std::size_t j = 0; j < d1; ++j) total.add(sample_variance(data.numerical(j)));
  return total.value() / static_cast<double>(d1);
}

double gini_impurity(std::span<const double> frequencies) {
  CompensatedSum sq;
  for (double q : frequencies) sq.add(q * q);
  return 1.0 - sq.value();
}

double categorical_gini(const Dataset& data, std::size_t j) {
  const auto& levels = data.schema().categorical(j).levels;
  std::vector<std::size_t> counts(levels.size(), 0);
  for (std::int32_t v : data.categorical(j)) ++counts[static_cast<std::size_t>(v)];
  std::vector<double> freq(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    freq[l] = static_cast<double>(counts[l]) / static_cast<double>(data.size());
  }
  return gini_impurity(freq);
}

double estimate_lambda1(const Dataset& data) {
  const double var = numerical_average_variance(data);
  const std::size_t m = data.schema().categorical_count();
  if (m == 0) throw ValidationError("lambda1 estimation needs at least one categorical attribute");
  CompensatedSum g;
  for (std::size_t j = 0; j < m; ++j) g.add(categorical_gini(data, j));
  const double avg_gini = g.value() / static_cast<double>(m);
  if (!(avg_gini > 0.0)) {
    throw ValidationError(
        "every categorical attribute is constant (Gini impurity 0); set lambda1 manually");
  }
  return var / avg_gini;
}

GeoPoint coordinate_center(const Dataset& data) {
  if (!data.has_spatial()) throw ValidationError("dataset has no spatial pair");
  if (data.empty()) throw ValidationError("coordinate center of an empty dataset");
  const double n = static_cast<double>(data.size());
  return {compensated_sum(data.latitude()) / n, compensated_sum(data.longitude()) / n};
}

namespace {

struct SpatialSpread {
  GeoPoint center;
  double variance = 0.0;
  bool degenerate = true;
};

SpatialSpread spatial_spread(const Dataset& data, const EarthModel& earth) {
  SpatialSpread s;
  s.center = coordinate_center(data);
  std::vector<double> dist(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    dist[i] = geodetic_distance_m({data.latitude()[i], data.longitude()[i]}, s.center, earth);
  }
  s.variance = sample_variance(dist);
  const double mean = data.empty() ? 0.0 : compensated_sum(dist) / static_cast<double>(dist.size());
  // Equal distances computed along different paths can differ in the last
  // bits; treat spread below 1e-9 of the mean distance as none.
  const double floor = 1e-9 * std::max(mean, 1e-3);
  s.degenerate = !(s.variance > floor * floor);
  return s;
}

}  // namespace

double estimate_lambda2(const Dataset& data, const EarthModel& earth) {
  const double var = numerical_average_variance(data);
  const SpatialSpread s = spatial_spread(data, earth);
  if (s.degenerate) {
    throw ValidationError(
        "geodetic distances to the coordinate center have no spread; set lambda2 manually");
  }
  return var / s.variance;
}

LambdaEstimate estimate_lambdas(const Dataset& data, const EarthModel& earth) {
  LambdaEstimate e;
  e.numer_avg_variance = numerical_average_variance(data);
  const std::size_t m = data.schema().categorical_count();
  if (m > 0) {
    CompensatedSum g;
    for (std::size_t j = 0; j < m; ++j) g.add(categorical_gini(data, j));
    e.categorical_avg_gini = g.value() / static_cast<double>(m);
    if (e.categorical_avg_gini > 0.0) {
      e.lambda1 = e.numer_avg_variance / e.categorical_avg_gini;
      e.has_lambda1 = true;
    }
  }
  if (data.has_spatial()) {
    const SpatialSpread s = spatial_spread(data, earth);
    e.center = s.center;
    e.spatial_distance_variance = s.variance;
    if (!s.degenerate) {
      e.lambda2 = e.numer_avg_variance / s.variance;
      e.has_lambda2 = true;
    }
  }
  return e;
}

}  // namespace geoproto
