#include <cmath>
#include <map>

#include "doctest.h"
#include "geoproto/error.hpp"
#include "geoproto/lambda.hpp"
#include "support.hpp"

using namespace geoproto;

namespace {

Dataset from_columns(std::vector<std::vector<double>> num, std::vector<std::vector<std::int32_t>> cat,
                     std::vector<std::string> levels, std::vector<double> lat = {},
                     std::vector<double> lon = {}) {
  std::vector<AttributeDescriptor> attrs;
  for (std::size_t j = 0; j < num.size(); ++j) attrs.push_back(AttributeDescriptor::numerical("x" + std::to_string(j)));
  for (std::size_t j = 0; j < cat.size(); ++j) attrs.push_back(AttributeDescriptor::categorical("c" + std::to_string(j), levels));
  if (!lat.empty()) attrs.push_back(AttributeDescriptor::spatial("loc", "lat", "lon"));
  DatasetColumns cols;
  const std::size_t n = !num.empty() ? num[0].size() : !cat.empty() ? cat[0].size() : lat.size();
  cols.numerical_raw = std::move(num);
  cols.categorical = std::move(cat);
  cols.latitude_deg = std::move(lat);
  cols.longitude_deg = std::move(lon);
  for (std::size_t i = 0; i < n; ++i) cols.ids.push_back(std::to_string(i));
  return Dataset::build(std::make_shared<const Schema>(attrs), std::move(cols));
}

long double brute_variance(const std::vector<long double>& xs) {
  long double mean = 0;
  for (auto x : xs) mean += x;
  mean /= xs.size();
  long double ss = 0;
  for (auto x : xs) ss += (x - mean) * (x - mean);
  return ss / (xs.size() - 1);
}

long double brute_numerator(const Dataset& d) {
  long double total = 0;
  for (std::size_t j = 0; j < d.schema().numerical_count(); ++j) {
    std::vector<long double> xs(d.numerical(j).begin(), d.numerical(j).end());
    total += brute_variance(xs);
  }
  return total / d.schema().numerical_count();
}

long double brute_lambda1(const Dataset& d) {
  long double gini_sum = 0;
  for (std::size_t j = 0; j < d.schema().categorical_count(); ++j) {
    long double sq = 0;
    for (std::size_t l = 0; l < d.schema().categorical(j).levels.size(); ++l) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < d.size(); ++i) count += d.categorical(j)[i] == static_cast<std::int32_t>(l);
      const long double q = static_cast<long double>(count) / d.size();
      sq += q * q;
    }
    gini_sum += 1 - sq;
  }
  return brute_numerator(d) / (gini_sum / d.schema().categorical_count());
}

long double brute_lambda2(const Dataset& d) {
  long double lat = 0, lon = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    lat += d.latitude()[i];
    lon += d.longitude()[i];
  }
  lat /= d.size();
  lon /= d.size();
  const double r2d = 180.0 / 3.14159265358979323846;
  std::vector<long double> dist;
  for (std::size_t i = 0; i < d.size(); ++i) {
    dist.push_back(testing::haversine_m(d.latitude()[i] * r2d, d.longitude()[i] * r2d,
                                        static_cast<double>(lat) * r2d,
                                        static_cast<double>(lon) * r2d, testing::kRadius));
  }
  return brute_numerator(d) / brute_variance(dist);
}

}  // namespace

TEST_CASE("gini impurity of the plan mix") {
  const std::vector<double> plan{0.7428, 0.1455, 0.1117};
  CHECK(std::fabs(gini_impurity(plan) - 0.4147) <= 1e-4);
  const std::vector<double> even{0.5, 0.5};
  CHECK(gini_impurity(even) == 0.5);
}

TEST_CASE("hand-evaluated lambda1") {
  // Normalized columns with sample variances 1 and 3 need raw ranges that
  // normalize to themselves, so build values already in [0, 1] and check
  // the ratio against the directly computed variances instead.
  const Dataset d = from_columns({{0, 1, 0, 1}, {0, 0.5, 1, 0.25}}, {{0, 1, 0, 1}}, {"a", "b"});
  const double v0 = 1.0 / 3.0;
  const double mean1 = 1.75 / 4;
  const double v1 = ((0 - mean1) * (0 - mean1) + (0.5 - mean1) * (0.5 - mean1) +
                     (1 - mean1) * (1 - mean1) + (0.25 - mean1) * (0.25 - mean1)) / 3.0;
  CHECK(numerical_average_variance(d) == doctest::Approx((v0 + v1) / 2).epsilon(1e-14));
  CHECK(estimate_lambda1(d) == doctest::Approx((v0 + v1) / 2 / 0.5).epsilon(1e-14));
}

TEST_CASE("constant categoricals make lambda1 undefined") {
  const Dataset d = from_columns({{0, 1, 2}}, {{1, 1, 1}}, {"a", "b"});
  CHECK_THROWS_AS(estimate_lambda1(d), ValidationError);
  const auto est = estimate_lambdas(d);
  CHECK_FALSE(est.has_lambda1);
}

TEST_CASE("points at one location make lambda2 undefined") {
  const Dataset d = from_columns({{0, 1, 2}}, {}, {}, {40, 40, 40}, {-80, -80, -80});
  CHECK_THROWS_AS(estimate_lambda2(d), ValidationError);
  // Two points symmetric about the center are equidistant from it.
  const Dataset e = from_columns({{0, 1}}, {}, {}, {0, 0}, {-1, 1});
  CHECK_THROWS_AS(estimate_lambda2(e), ValidationError);
}

TEST_CASE("center is the mean latitude and longitude") {
  const Dataset d = from_columns({{0, 1, 2}}, {}, {}, {10, 20, 30}, {-100, -90, -80});
  const GeoPoint c = coordinate_center(d);
  CHECK(c.lat == doctest::Approx(20 * kDegToRad));
  CHECK(c.lon == doctest::Approx(-90 * kDegToRad));
}

TEST_CASE("estimators match brute-force oracles") {
  for (Seed seed = 0; seed < 25; ++seed) {
    const Dataset d = testing::random_dataset(
        {.n = 50 + 10 * seed, .numerical = 1 + seed % 3, .categorical = 1 + seed % 2, .levels = 2 + seed % 4},
        seed);
    CHECK(testing::relative_close(estimate_lambda1(d), static_cast<double>(brute_lambda1(d)), 1e-10));
    CHECK(testing::relative_close(estimate_lambda2(d), static_cast<double>(brute_lambda2(d)), 1e-10));
    const auto est = estimate_lambdas(d);
    CHECK(est.lambda2 * est.spatial_distance_variance ==
          doctest::Approx(est.numer_avg_variance).epsilon(1e-10));
    CHECK(est.lambda1 * est.categorical_avg_gini ==
          doctest::Approx(est.numer_avg_variance).epsilon(1e-10));
  }
}

TEST_CASE("lambdas do not depend on record order") {
  const Dataset d = testing::random_dataset({.n = 300}, 77);
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rows.size() - 1 - i;
  const Dataset r = d.subset(rows);
  CHECK(testing::relative_close(estimate_lambda1(d), estimate_lambda1(r), 1e-12));
  CHECK(testing::relative_close(estimate_lambda2(d), estimate_lambda2(r), 1e-12));
}
