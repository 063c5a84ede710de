#pragma once

#include "geoproto/distance.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

/// Balance weights estimated from the data, with the pieces they come from.
struct LambdaEstimate {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double numer_avg_variance = 0.0;
  double categorical_avg_gini = 0.0;
  double spatial_distance_variance = 0.0;  // m^2
  GeoPoint center;
  bool has_lambda1 = false;
  bool has_lambda2 = false;

  Weights weights() const { return {lambda1, lambda2}; }
};

/// Mean over numerical attributes of the sample variance (n - 1) of the
/// normalized values.
double numerical_average_variance(const Dataset& data);

/// 1 - sum of squared level frequencies.
double gini_impurity(std::span<const double> frequencies);

/// Gini impurity of categorical attribute j from its observed frequencies.
double categorical_gini(const Dataset& data, std::size_t j);

/// Average numerical variance over average categorical Gini impurity.
/// Throws ValidationError when every categorical attribute is constant.
double estimate_lambda1(const Dataset& data);

/// Coordinate-wise mean of latitude and longitude (radians).
GeoPoint coordinate_center(const Dataset& data);

/// Average numerical variance over the sample variance of geodetic distances
/// (meters) from each record to the coordinate center. Throws
/// ValidationError when that variance is zero.
double estimate_lambda2(const Dataset& data, const EarthModel& earth = {});

/// Both estimates; a weight whose data is degenerate or absent is left at 0
/// with its has_ flag false instead of throwing.
LambdaEstimate estimate_lambdas(const Dataset& data, const EarthModel& earth = {});

}  // namespace geoproto
