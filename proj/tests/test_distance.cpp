#include <cmath>

#include "doctest.h"
#include "geoproto/distance.hpp"
#include "geoproto/error.hpp"
#include "support.hpp"

using namespace geoproto;

TEST_CASE("effective radius") {
  CHECK(EarthModel{}.effective_radius_m() == doctest::Approx(6356752.314245).epsilon(1e-12));
}

TEST_CASE("one degree along the equator and the antipode") {
  const double R = EarthModel{}.effective_radius_m();
  const double one = geodetic_distance_m(GeoPoint::from_degrees(0, 0), GeoPoint::from_degrees(0, 1));
  CHECK(std::fabs(one - R * kPi / 180.0) <= 0.01);
  CHECK(std::fabs(one - 110946.25) <= 0.01);
  const double anti =
      geodetic_distance_m(GeoPoint::from_degrees(0, 0), GeoPoint::from_degrees(0, 180));
  CHECK(std::fabs(anti - R * kPi) <= 0.01);
  const double pole =
      geodetic_distance_m(GeoPoint::from_degrees(90, 0), GeoPoint::from_degrees(-90, 0));
  CHECK(std::fabs(pole - R * kPi) <= 0.01);
}

TEST_CASE("geodetic distance agrees with haversine") {
  Rng rng(17);
  for (int i = 0; i < 5000; ++i) {
    const double a = rng.uniform(-89, 89), b = rng.uniform(-180, 180);
    const double c = rng.uniform(-89, 89), d = rng.uniform(-180, 180);
    const double got = geodetic_distance_m(GeoPoint::from_degrees(a, b), GeoPoint::from_degrees(c, d));
    const double want = testing::haversine_m(a, b, c, d, testing::kRadius);
    CHECK(testing::relative_close(got, want, 1e-6));
  }
}

TEST_CASE("geodetic distance is symmetric, zero on identity and bounded") {
  Rng rng(5);
  const double R = EarthModel{}.effective_radius_m();
  for (int i = 0; i < 1000; ++i) {
    const auto p = GeoPoint::from_degrees(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const auto q = GeoPoint::from_degrees(rng.uniform(-90, 90), rng.uniform(-180, 180));
    CHECK(geodetic_distance_m(p, q) == geodetic_distance_m(q, p));
    CHECK(geodetic_distance_m(p, p) == 0.0);
    CHECK(geodetic_distance_m(p, q) >= 0.0);
    CHECK(geodetic_distance_m(p, q) <= R * kPi + 1e-6);
  }
}

TEST_CASE("central angle rejects non-finite input") {
  CHECK_THROWS_AS(central_angle({NAN, 0}, {0, 0}), ValidationError);
}

TEST_CASE("simple matching counts differing positions") {
  const std::vector<std::int32_t> a{0, 1, 2, 3}, b{0, 2, 2, 1}, c{0, 1};
  CHECK(simple_matching(a, a) == 0);
  CHECK(simple_matching(a, b) == 2);
  CHECK_THROWS_AS(simple_matching(a, c), ValidationError);
}

TEST_CASE("mixed distance components") {
  MixedPoint x{{0.1, 0.5}, {1, 2}, SpatialPoint::from_radians(0, 0)};
  MixedPoint z{{0.4, 0.1}, {1, 0}, SpatialPoint::from_radians(0, kDegToRad)};
  const Weights w{0.3, 2e-6};
  const auto c = mixed_distance_components(x, z, w);
  CHECK(c.numerical == doctest::Approx(0.09 + 0.16));
  CHECK(c.categorical == doctest::Approx(0.3));
  CHECK(c.spatial == doctest::Approx(2e-6 * testing::kRadius * kDegToRad).epsilon(1e-12));
  CHECK(mixed_distance(x, z, w) == doctest::Approx(c.numerical + c.categorical + c.spatial));
  CHECK(mixed_distance(x, z, w) == doctest::Approx(testing::oracle_distance(x, z, 0.3, 2e-6)));
}

TEST_CASE("weights must be finite and non-negative") {
  CHECK_THROWS_AS((Weights{-1, 0}).validate(), ValidationError);
  CHECK_THROWS_AS((Weights{0, NAN}).validate(), ValidationError);
  CHECK_NOTHROW((Weights{0, 0}).validate());
}

TEST_CASE("mixed distance is symmetric and zero only for equal records") {
  const Dataset d = testing::random_dataset({.n = 300, .levels = 2, .coarse_coordinates = true}, 9);
  const Weights w{0.5, 1e-6};
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    const auto a = d.record(i), b = d.record(i + 1);
    CHECK(mixed_distance(a, b, w) == mixed_distance(b, a, w));
    CHECK(mixed_distance(a, a, w) == 0.0);
    const bool equal = a.numerical == b.numerical && a.categorical == b.categorical &&
                       a.spatial == b.spatial;
    CHECK((mixed_distance(a, b, w) == 0.0) == equal);
  }
}
